#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ema/config.hpp"
#include "ema/gradient_io.hpp"
#include "ema/sim/simulation.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ema::Error(ema::ErrorCode::IoError, "cannot write " + path.string());
  os << content;
}

ema::KeyValueConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  ema::KeyValueConfig config = ema::KeyValueConfig::parse_file(path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ema::Error(ema::ErrorCode::InvalidConfig, "--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EMA_THREADS")) {
    const unsigned long cap = std::strtoul(env, nullptr, 10);
    if (cap >= 1) n = std::min<std::size_t>(n, cap);
  }
  return std::min(n, std::max<std::size_t>(1, jobs));
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::vector<std::string>& sets) {
  ema::KeyValueConfig raw;
  ema::sim::SimConfig config;
  try {
    raw = load_config(config_path, sets);
    config = ema::sim_config_from(raw);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    const std::string started = timestamp_utc();
    const auto metrics = ema::sim::run_simulation(config);

    std::filesystem::create_directories(out_dir);
    const auto csv_path = std::filesystem::path(out_dir) / "metrics.csv";
    write_file(csv_path, ema::sim::metrics_to_csv(config, metrics));

    nlohmann::json manifest{
        {"config_hash", raw.hash_hex()},
        {"artifacts", {{"metrics_csv", csv_path.string()}}},
        {"tool_version", kToolVersion},
        {"started_at", started},
    };
    write_file(std::filesystem::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");

    if (!metrics.empty()) {
      const auto& last = metrics.back();
      std::cout << "rounds: " << metrics.size() << "  final accuracy: "
                << ema::sim::format_double(last.test_accuracy)
                << "  final loss: " << ema::sim::format_double(last.test_loss) << "\n";
    } else {
      std::cout << "rounds: 0 (model untouched)\n";
    }
    std::cout << "config hash: " << raw.hash_hex() << "\nwrote " << csv_path.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

int cmd_pretest(const std::string& dump_path, double alpha, const std::string& test_name,
                const std::string& out_path) {
  try {
    const auto kind = ema::test_kind_from_name(test_name);
    if (!kind)
      throw ema::Error(ema::ErrorCode::InvalidConfig, "unknown test kind: " + test_name);
    const auto updates = ema::load_round(dump_path);
    const auto samples = ema::transpose_to_coordinates(updates);

    nlohmann::json out;
    if (*kind == ema::NormalityTestKind::Both) {
      const auto sw = ema::pretest_round(samples, alpha, ema::NormalityTestKind::ShapiroWilk);
      const auto ad = ema::pretest_round(samples, alpha, ema::NormalityTestKind::AndersonDarling);
      const auto both = ema::pretest_round(samples, alpha, ema::NormalityTestKind::Both);
      out["shapiro_wilk"] = nlohmann::json::parse(ema::pretest_report_to_json(sw));
      out["anderson_darling"] = nlohmann::json::parse(ema::pretest_report_to_json(ad));
      out["both"] = nlohmann::json::parse(ema::pretest_report_to_json(both));
      std::cout << "Pre-Testing rate (shapiro_wilk): " << ema::sim::format_double(sw.rate) << "\n";
      std::cout << "Pre-Testing rate (anderson_darling): " << ema::sim::format_double(ad.rate)
                << "\n";
      std::cout << "Pre-Testing rate (both): " << ema::sim::format_double(both.rate) << "\n";
    } else {
      const auto report = ema::pretest_round(samples, alpha, *kind);
      out = nlohmann::json::parse(ema::pretest_report_to_json(report));
      std::cout << "Pre-Testing rate (" << ema::test_kind_name(*kind)
                << "): " << ema::sim::format_double(report.rate) << "\n";
    }
    write_file(out_path, out.dump(2) + "\n");
    std::cout << "wrote " << out_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "pretest error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

std::vector<ema::ClientLossRecord> load_losses_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ema::Error(ema::ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("client_id", 0) != 0)
    throw ema::Error(ema::ErrorCode::IoError, "losses CSV must start with a client_id header");
  std::vector<ema::ClientLossRecord> records;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ema::Error(ema::ErrorCode::IoError, "bad losses row: " + line);
    ema::ClientLossRecord r;
    r.client_id = static_cast<std::uint32_t>(std::stoul(line.substr(0, comma)));
    r.loss = std::stod(line.substr(comma + 1));
    records.push_back(r);
  }
  return records;
}

int cmd_heterogeneity(const std::string& losses_path, const std::string& config_path, double d,
                      const std::string& out_path) {
  try {
    std::vector<ema::ClientLossRecord> losses;
    if (!losses_path.empty()) {
      losses = load_losses_csv(losses_path);
    } else {
      ema::sim::SimConfig config;
      try {
        config = ema::sim_config_from(ema::KeyValueConfig::parse_file(config_path));
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
      }
      ema::sim::Simulation sim(config);
      sim.run();
      losses = sim.client_mse_losses();
    }
    const ema::HeterogeneityReport report = ema::detect_non_iid(losses, d);
    for (const auto& r : report.losses) {
      std::printf("Client: %u, Loss: %.4f\n", r.client_id, r.loss);
    }
    std::cout << "mu: " << ema::sim::format_double(report.mu)
              << "  sigma: " << ema::sim::format_double(report.sigma)
              << "  cv: " << ema::sim::format_double(report.cv)
              << "  threshold: " << ema::sim::format_double(report.threshold_d) << "\n";
    std::cout << ema::verdict_message(report.verdict) << "\n";
    if (!out_path.empty()) {
      write_file(out_path, ema::heterogeneity_report_to_json(report) + "\n");
      std::cout << "wrote " << out_path << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "heterogeneity error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

int cmd_aggregate(const std::string& dump_path, const std::string& rule_name, double k,
                  double trim_fraction, unsigned f, const std::string& out_path) {
  try {
    const auto rule = ema::rule_from_name(rule_name);
    if (!rule) throw ema::Error(ema::ErrorCode::InvalidConfig, "unknown rule: " + rule_name);
    if (*rule == ema::AggregationRule::Zeno)
      throw ema::Error(ema::ErrorCode::InvalidConfig,
                       "zeno needs a validation oracle; run it inside simulate");
    ema::AggregationConfig config;
    config.rule = *rule;
    config.k = k;
    config.trim_fraction = trim_fraction;
    config.byzantine_count_f = f;

    const auto updates = ema::load_round(dump_path);
    const auto outcome = ema::aggregate(updates, config);

    std::vector<ema::ClientUpdate> result{{0, 0, outcome.global_update, ""}};
    ema::save_round_binary(out_path, result);

    std::cout << "rule: " << ema::rule_name(*rule) << "  clients: " << updates.size()
              << "  dim: " << outcome.global_update.dim() << "\n";
    if (!outcome.diagnostics.retained_counts.empty())
      std::cout << "retained mean: "
                << ema::sim::format_double(outcome.diagnostics.retained_mean()) << "\n";
    if (outcome.diagnostics.mean_weight > 0.0)
      std::cout << "estimator weight: "
                << ema::sim::format_double(outcome.diagnostics.mean_weight) << "\n";
    std::cout << "fallbacks: median=" << outcome.diagnostics.median_fallback_count
              << " all_filtered=" << outcome.diagnostics.all_filtered_count << "\n";
    if (outcome.diagnostics.selected_client)
      std::cout << "selected client: " << *outcome.diagnostics.selected_client << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "aggregate error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& fractions,
              const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& rules,
              const std::vector<std::string>& sets, const std::string& out_path) {
  struct Job {
    double fraction;
    std::uint64_t seed;
    std::string rule;
  };
  std::vector<Job> jobs;
  for (double f : fractions)
    for (std::uint64_t s : seeds)
      for (const auto& r : rules) jobs.push_back({f, s, r});
  if (jobs.empty()) {
    std::cerr << "sweep error: empty fraction/seed/rule cross product\n";
    return kExitConfigError;
  }

  ema::KeyValueConfig base;
  try {
    base = load_config(config_path, sets);
    for (const auto& r : rules) {
      if (!ema::rule_from_name(r))
        throw ema::Error(ema::ErrorCode::InvalidConfig, "unknown rule: " + r);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  std::vector<std::string> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto run_job = [&](std::size_t idx) {
    const Job& job = jobs[idx];
    ema::KeyValueConfig kv = base;
    kv.set("attack.fraction", ema::sim::format_double(job.fraction));
    kv.set("simulation.seed", std::to_string(job.seed));
    kv.set("rule.name", job.rule);
    const ema::sim::SimConfig config = ema::sim_config_from(kv);
    const auto metrics = ema::sim::run_simulation(config);
    std::string csv = ema::sim::metrics_to_csv(config, metrics);
    results[idx] = csv.substr(csv.find('\n') + 1);  // strip header
  };

  const std::size_t workers = worker_count(jobs.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= jobs.size() || failed.load()) break;
        try {
          run_job(idx);
        } catch (const std::exception& e) {
          std::scoped_lock lock(error_mutex);
          failed = true;
          if (first_error.empty()) first_error = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed) {
    std::cerr << "sweep error: " << first_error << "\n";
    return kExitRuntimeError;
  }

  std::ostringstream combined;
  combined << "round,rule,attack_kind,attack_fraction,seed,test_accuracy,test_loss,"
              "ema_fallback_count,retained_mean\n";
  for (const auto& rows : results) combined << rows;
  try {
    write_file(out_path, combined.str());
  } catch (const std::exception& e) {
    std::cerr << "sweep error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  std::cout << "ran " << jobs.size() << " combinations with " << workers << " worker(s)\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-robust gradient aggregation and federated-learning simulator"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config_path, sim_out_dir = "out";
  std::vector<std::string> sim_sets;
  auto* simulate = app.add_subcommand("simulate", "Run a federated simulation");
  simulate->add_option("--config", sim_config_path, "Config file")->required();
  simulate->add_option("--out", sim_out_dir, "Output directory");
  simulate->add_option("--set", sim_sets, "Override key=value (repeatable)");

  // pretest
  std::string pre_dump, pre_test = "both", pre_out = "pretest_report.json";
  double pre_alpha = 0.05;
  auto* pretest = app.add_subcommand("pretest", "Normality pre-test over a gradient dump");
  pretest->add_option("--dump", pre_dump, "Gradient round dump (EMAG or CSV)")->required();
  pretest->add_option("--alpha", pre_alpha, "Significance level");
  pretest->add_option("--test", pre_test, "sw | ad | both");
  pretest->add_option("--out", pre_out, "JSON report path");

  // heterogeneity
  std::string het_losses, het_config, het_out;
  double het_d = 0.25;
  auto* het = app.add_subcommand("heterogeneity", "CV-threshold non-IID detection");
  auto* het_l = het->add_option("--losses", het_losses, "CSV of client_id,loss");
  auto* het_c = het->add_option("--config", het_config, "Train first, then evaluate per client");
  het->add_option("--threshold", het_d, "CV threshold d");
  het->add_option("--out", het_out, "Optional JSON report path");
  het_l->excludes(het_c);

  // aggregate
  std::string agg_dump, agg_rule = "ema", agg_out = "global_update.emag";
  double agg_k = 1.5, agg_trim = 0.1;
  unsigned agg_f = 0;
  auto* agg = app.add_subcommand("aggregate", "One-shot aggregation over a dumped round");
  agg->add_option("--dump", agg_dump, "Gradient round dump")->required();
  agg->add_option("--rule", agg_rule, "ema | mean | median | trimmed_mean | krum");
  agg->add_option("--k", agg_k, "IQR fence multiplier (ema)");
  agg->add_option("--trim-fraction", agg_trim, "Count-trim fraction (trimmed_mean)");
  agg->add_option("--byzantine-f", agg_f, "Assumed Byzantine count (krum)");
  agg->add_option("--out", agg_out, "Output dump path");

  // sweep
  std::string sweep_config, sweep_out = "sweep.csv";
  std::vector<double> sweep_fractions;
  std::vector<std::uint64_t> sweep_seeds;
  std::vector<std::string> sweep_rules, sweep_sets;
  auto* sweep = app.add_subcommand("sweep", "Cross product of fractions x seeds x rules");
  sweep->add_option("--config", sweep_config, "Config file")->required();
  sweep->add_option("--fractions", sweep_fractions, "Attack fractions")->required()->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "Seeds")->required()->delimiter(',');
  sweep->add_option("--rules", sweep_rules, "Rules")->required()->delimiter(',');
  sweep->add_option("--set", sweep_sets, "Override key=value (repeatable)");
  sweep->add_option("--out", sweep_out, "Combined CSV path");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return cmd_simulate(sim_config_path, sim_out_dir, sim_sets);
  if (pretest->parsed()) return cmd_pretest(pre_dump, pre_alpha, pre_test, pre_out);
  if (het->parsed()) {
    if (het_losses.empty() && het_config.empty()) {
      std::cerr << "heterogeneity: need --losses or --config\n";
      return kExitConfigError;
    }
    return cmd_heterogeneity(het_losses, het_config, het_d, het_out);
  }
  if (agg->parsed()) return cmd_aggregate(agg_dump, agg_rule, agg_k, agg_trim, agg_f, agg_out);
  if (sweep->parsed())
    return cmd_sweep(sweep_config, sweep_fractions, sweep_seeds, sweep_rules, sweep_sets, sweep_out);
  return 0;
}
