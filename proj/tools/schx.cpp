// schx: run, resume, validate-config, oracle-check, sweep, preset.

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "schx/runner.hpp"

extern char** environ;

namespace {

using namespace schx;

void print_violations(const ValidationError& e) {
  std::cerr << "invalid configuration:\n";
  for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
}

RunConfig resolve_config(const std::string& path, const std::string& preset_name) {
  if (!path.empty() && !preset_name.empty()) throw ValidationError({"give either --config or --preset, not both"});
  if (path.empty() && preset_name.empty()) throw ValidationError({"one of --config or --preset is required"});
  return path.empty() ? preset(preset_name) : load_config(path);
}

void report_run(const RunResult& r) {
  const auto& s = r.summary;
  std::cout << "status: " << s.value("status", "?") << "\n";
  if (!r.message.empty()) std::cout << "message: " << r.message << "\n";
  if (r.exit_code == exit_aborted)
    std::cout << "last checkpoint: " << (r.last_checkpoint.empty() ? "none" : r.last_checkpoint) << "\n";
  if (s.contains("mass_drift")) std::cout << "mass drift: " << s["mass_drift"].dump() << "\n";
  if (s.contains("hamiltonian_drift")) std::cout << "hamiltonian drift: " << s["hamiltonian_drift"].dump() << "\n";
}

void set_path(YAML::Node root, const std::string& dotted, const YAML::Node& value) {
  std::vector<std::string> keys;
  std::stringstream ss(dotted);
  for (std::string k; std::getline(ss, k, '.');) keys.push_back(k);
  if (keys.empty()) throw ValidationError({"--set needs a key path"});
  // yaml-cpp nodes are handles: walking with operator[] builds the path in place
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) chain.push_back(chain.back()[keys[i]]);
  chain.back()[keys.back()] = value;
}

int spawn_and_wait(const std::vector<std::string>& args, std::vector<pid_t>& running, std::size_t jobs,
                   std::vector<std::pair<pid_t, std::size_t>>& owner, std::vector<int>& codes, std::size_t index) {
  auto reap_one = [&] {
    int status = 0;
    const pid_t p = waitpid(-1, &status, 0);
    for (auto& [pid, idx] : owner)
      if (pid == p) codes[idx] = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
    std::erase(running, p);
  };
  while (running.size() >= jobs) reap_one();
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  if (posix_spawn(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0) return -1;
  running.push_back(pid);
  owner.emplace_back(pid, index);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled Schrödinger–Choquard / Hartree–Fock simulator and diagnostics"};
  app.require_subcommand(1);
  int threads = 1;
  std::uint64_t seed = 0;
  std::string config_path, preset_name, out_dir;

  auto* run_cmd = app.add_subcommand("run", "run a scenario");
  run_cmd->add_option("--config", config_path, "YAML run config");
  run_cmd->add_option("--preset", preset_name, "built-in scenario")->check(CLI::IsMember(preset_names()));
  run_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = run_cmd->add_option("--seed", seed, "overrides the config seed");

  auto* resume_cmd = app.add_subcommand("resume", "continue a run from its last checkpoint");
  resume_cmd->add_option("--out", out_dir, "output directory of the interrupted run")->required();
  resume_cmd->add_option("--config", config_path, "config (default: OUT/config.yaml)");
  resume_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate-config", "parse, validate and echo a config");
  validate_cmd->add_option("--config", config_path, "YAML run config");
  validate_cmd->add_option("--preset", preset_name, "built-in scenario")->check(CLI::IsMember(preset_names()));
  auto* vseed_opt = validate_cmd->add_option("--seed", seed, "overrides the config seed");

  bool corrupt = false;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "FFT path vs direct sums on the config's initial state");
  oracle_cmd->add_option("--config", config_path, "YAML run config");
  oracle_cmd->add_option("--preset", preset_name, "built-in scenario")->check(CLI::IsMember(preset_names()));
  oracle_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* oseed_opt = oracle_cmd->add_option("--seed", seed, "overrides the config seed");
  oracle_cmd->add_flag("--corrupt-kernel", corrupt, "test hook: perturb the FFT-path kernel");

  std::vector<std::string> sets;
  std::size_t jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "one run process per value of a config key");
  sweep_cmd->add_option("--config", config_path, "base YAML run config")->required();
  sweep_cmd->add_option("--set", sets, "KEY=V1,V2,... (dotted key path)")->required();
  sweep_cmd->add_option("--out", out_dir, "parent output directory")->required();
  sweep_cmd->add_option("--threads", threads, "worker threads per run")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  std::string show_name;
  auto* preset_cmd = app.add_subcommand("preset", "print a built-in scenario as YAML");
  preset_cmd->add_option("name", show_name, "preset name")->required()->check(CLI::IsMember(preset_names()));

  CLI11_PARSE(app, argc, argv);
  set_worker_count(threads);

  try {
    if (*run_cmd) {
      RunConfig cfg = resolve_config(config_path, preset_name);
      if (*seed_opt) apply_seed(cfg, seed);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto r = run_scenario(cfg);
      report_run(r);
      return r.exit_code;
    }
    if (*resume_cmd) {
      const fs::path out = out_dir;
      RunConfig cfg = load_config(config_path.empty() ? (out / "config.yaml").string() : config_path);
      cfg.output_dir = out_dir;
      RunOptions opt;
      opt.resume = true;
      opt.log = [](const std::string& m) { std::cout << m << "\n"; };
      const auto r = run_scenario(cfg, opt);
      if (r.exit_code == exit_resume_mismatch) {
        std::cerr << "cannot resume: " << r.message << "\n";
        return r.exit_code;
      }
      report_run(r);
      return r.exit_code;
    }
    if (*validate_cmd) {
      RunConfig cfg = resolve_config(config_path, preset_name);
      if (*vseed_opt) apply_seed(cfg, seed);
      std::cout << emit_config(cfg);
      if (!cfg.free) {
        const auto rep = validate(cfg.params, cfg.grid);
        std::cout << "# regime: " << regime_name(rep.classification) << "\n";
      }
      return exit_ok;
    }
    if (*oracle_cmd) {
      RunConfig cfg = resolve_config(config_path, preset_name);
      if (*oseed_opt) apply_seed(cfg, seed);
      OracleOptions opt;
      opt.corrupt_kernel = corrupt;
      const auto report = oracle_check(cfg, opt);
      bool ok = true;
      for (const auto& e : report) {
        std::printf("%-24s %s  deviation %.3e  threshold %.0e\n", e.name.c_str(),
                    e.skipped ? "SKIP" : (e.pass ? "PASS" : "FAIL"), e.deviation, e.threshold);
        ok = ok && e.pass;
      }
      if (report.empty()) std::printf("no functionals selected\n");
      return ok ? exit_ok : exit_oracle_failed;
    }
    if (*sweep_cmd) {
      YAML::Node base = YAML::LoadFile(config_path);
      std::vector<std::pair<std::string, std::vector<std::string>>> axes;
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError({"--set expects KEY=V1,V2,... (got " + s + ")"});
        std::vector<std::string> vals;
        std::stringstream ss(s.substr(eq + 1));
        for (std::string v; std::getline(ss, v, ',');) vals.push_back(v);
        axes.emplace_back(s.substr(0, eq), vals);
      }
      // cartesian product of the value lists
      std::vector<std::vector<std::size_t>> combos{{}};
      for (const auto& ax : axes) {
        std::vector<std::vector<std::size_t>> next;
        for (const auto& c : combos)
          for (std::size_t i = 0; i < ax.second.size(); ++i) {
            auto d = c;
            d.push_back(i);
            next.push_back(d);
          }
        combos = next;
      }
      const std::string self = fs::canonical("/proc/self/exe").string();
      std::vector<std::string> labels;
      std::vector<fs::path> dirs;
      for (std::size_t k = 0; k < combos.size(); ++k) {
        YAML::Node node = YAML::Clone(base);
        std::string label;
        for (std::size_t a = 0; a < axes.size(); ++a) {
          set_path(node, axes[a].first, YAML::Load(axes[a].second[combos[k][a]]));
          label += (a ? " " : "") + axes[a].first + "=" + axes[a].second[combos[k][a]];
        }
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu", k);
        const fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);
        std::stringstream text;
        text << node << "\n";
        parse_config(text.str());  // reject the whole sweep before spawning anything
        write_text_atomic(dir / "input.yaml", text.str());
        labels.push_back(label);
        dirs.push_back(dir);
      }
      std::vector<pid_t> running;
      std::vector<std::pair<pid_t, std::size_t>> owner;
      std::vector<int> codes(combos.size(), -1);
      for (std::size_t k = 0; k < combos.size(); ++k) {
        const std::vector<std::string> args{self, "run", "--config", (dirs[k] / "input.yaml").string(), "--out",
                                            dirs[k].string(), "--threads", std::to_string(threads)};
        if (spawn_and_wait(args, running, jobs, owner, codes, k) != 0) codes[k] = exit_error;
      }
      while (!running.empty()) {
        int status = 0;
        const pid_t p = waitpid(-1, &status, 0);
        for (auto& [pid, idx] : owner)
          if (pid == p) codes[idx] = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
        std::erase(running, p);
      }
      int worst = exit_ok;
      for (std::size_t k = 0; k < combos.size(); ++k) {
        std::cout << dirs[k].filename().string() << "  " << labels[k] << "  exit " << codes[k] << "\n";
        if (codes[k] != 0) worst = codes[k];
      }
      return worst;
    }
    if (*preset_cmd) {
      std::cout << emit_config(preset(show_name));
      return exit_ok;
    }
  } catch (const ValidationError& e) {
    print_violations(e);
    return exit_invalid;
  } catch (const YAML::Exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_invalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  }
  return exit_ok;
}
