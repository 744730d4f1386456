#include <csignal>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <pthread.h>

#include "commands.hpp"
#include "multileave/http_api.hpp"
#include "multileave/service.hpp"

namespace {

using namespace multileave;
using namespace multileave::cli;

constexpr int kUsageExit = 1;
constexpr int kRuntimeExit = 2;

void add_sim_flags(CLI::App& sub, SimOptions& o) {
  sub.add_option("--methods", o.methods, "TDM, GOM, GOM-I, GOM-P, GOM-N")
      ->delimiter(',')
      ->capture_default_str();
  sub.add_option("--credit", o.credit, "credit for plain GOM: inverse, negative-rank, personalization")
      ->capture_default_str();
  sub.add_option("--runs", o.runs, "independent repetitions")->capture_default_str();
  sub.add_option("--seed", o.seed)->capture_default_str();
  sub.add_option("--alpha", o.alpha, "bias weight in the greedy objective")->capture_default_str();
  sub.add_option("--candidates", o.candidates, "candidate rankings per output")
      ->capture_default_str();
  sub.add_option("--numeval", o.numeval, "evaluation rounds per run")->capture_default_str();
  sub.add_option("--numclick", o.numclick, "clicks per round")->capture_default_str();
  sub.add_option("--click-bias", o.click_bias, "top x% of the preferred ranking that gets clicked")
      ->capture_default_str();
  sub.add_flag("--literal-win-rule", o.literal_win_rule,
               "score a round by rankers that beat the preferred one");
  sub.add_flag("--identical-inputs", o.identical_inputs, "every input equals the initial ranking");
  sub.add_flag("--per-run", o.per_run, "add one row per run");
}

struct Common {
  std::string out;
  std::size_t threads = default_threads();
};

void add_common(CLI::App& sub, Common& c, const std::string& default_out) {
  sub.add_option("--out", c.out, "CSV path; the manifest goes next to it")
      ->default_str(default_out);
  sub.add_option("--threads", c.threads)->capture_default_str()->check(CLI::PositiveNumber);
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log_path = "multileave-events.jsonl";
  std::string method = "GOM";
  std::string credit = "personalization";
  std::size_t candidates = 10;
  double alpha = 0.0;
  long long ttl_seconds = 24 * 3600;
  std::string token;
  bool sync = false;
};

int serve(const ServeOptions& o) {
  ServiceConfig config;
  auto method = parse_method(o.method);
  auto credit = parse_credit_function(o.credit);
  if (!method) throw UsageError("unknown method '" + o.method + "'");
  if (!credit) throw UsageError("unknown credit function '" + o.credit + "'");
  if (o.ttl_seconds < 1) throw UsageError("--session-ttl must be positive");
  config.default_method = *method;
  config.default_credit = *credit;
  config.candidate_count = o.candidates;
  config.alpha = o.alpha;
  config.session_ttl = std::chrono::seconds(o.ttl_seconds);

  // Signals go to the waiting main thread only.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto log = std::make_shared<FileEventLog>(o.log_path, o.sync);
  ComparisonService service(config, log);
  httplib::Server server;
  use_exclusive_port(server);
  register_routes(server, service,
                  o.token.empty() ? std::nullopt : std::optional<std::string>(o.token));
  if (!server.bind_to_port(o.host, o.port)) {
    throw std::runtime_error(fmt::format("cannot listen on {}:{} (address in use?)", o.host, o.port));
  }
  std::cerr << fmt::format("listening on {}:{}, log {}\n", o.host, o.port, o.log_path);

  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopping = false;
  std::thread listener([&] { server.listen_after_bind(); });
  std::thread evictor([&] {
    const auto period = std::min<std::chrono::seconds>(config.session_ttl, std::chrono::minutes(1));
    std::unique_lock lock(stop_mutex);
    while (!stop_cv.wait_for(lock, period, [&] { return stopping; })) service.evict_idle();
  });

  int signal = 0;
  sigwait(&signals, &signal);
  std::cerr << "shutting down\n";
  server.stop();
  listener.join();
  {
    std::lock_guard lock(stop_mutex);
    stopping = true;
  }
  stop_cv.notify_all();
  evictor.join();
  log->flush();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multileaving evaluation toolkit"};
  app.set_version_flag("--version", std::string(MULTILEAVE_VERSION));
  app.require_subcommand(1);

  Common common;
  SweepRankersOptions rankers_opts;
  auto* rankers = app.add_subcommand("sweep-rankers", "accuracy versus number of rankers");
  add_sim_flags(*rankers, rankers_opts.sim);
  add_common(*rankers, common, "sweep_rankers.csv");
  rankers->add_option("--n-min", rankers_opts.n_min)->capture_default_str();
  rankers->add_option("--n-max", rankers_opts.n_max)->capture_default_str();
  rankers->add_option("--length", rankers_opts.length)->capture_default_str();

  SweepLengthOptions length_opts;
  auto* lengths = app.add_subcommand("sweep-length", "accuracy versus ranking length");
  add_sim_flags(*lengths, length_opts.sim);
  add_common(*lengths, common, "sweep_length.csv");
  lengths->add_option("--rankers", length_opts.rankers)->capture_default_str();
  lengths->add_option("--l-min", length_opts.l_min)->capture_default_str();
  lengths->add_option("--l-max", length_opts.l_max)->capture_default_str();
  lengths->add_option("--length-step", length_opts.length_step)->capture_default_str();

  InsensitivityOptions ins_opts;
  auto* ins = app.add_subcommand("insensitivity", "sigma^2/mu^2 over rankers and lengths");
  add_sim_flags(*ins, ins_opts.sim);
  add_common(*ins, common, "insensitivity.csv");
  ins->add_option("--axis", ins_opts.axis, "rankers, length or both")->capture_default_str();
  ins->add_option("--n-min", ins_opts.n_min)->capture_default_str();
  ins->add_option("--n-max", ins_opts.n_max)->capture_default_str();
  ins->add_option("--length", ins_opts.length, "length for the ranker sweep")->capture_default_str();
  ins->add_option("--rankers", ins_opts.rankers, "rankers for the length sweep")
      ->capture_default_str();
  ins->add_option("--l-min", ins_opts.l_min)->capture_default_str();
  ins->add_option("--l-max", ins_opts.l_max)->capture_default_str();
  ins->add_option("--length-step", ins_opts.length_step)->capture_default_str();

  BiasOptions bias_opts;
  auto* bias = app.add_subcommand("bias", "bias distribution of greedy rankings");
  add_common(*bias, common, "bias.csv");
  bias->add_option("--rankers", bias_opts.rankers)->capture_default_str();
  bias->add_option("--length", bias_opts.length)->capture_default_str();
  bias->add_option("--candidates", bias_opts.candidates)->capture_default_str();
  bias->add_option("--alpha", bias_opts.alpha)->capture_default_str();
  bias->add_option("--generations", bias_opts.generations)->capture_default_str();
  bias->add_option("--seed", bias_opts.seed)->capture_default_str();
  bias->add_flag("--identical-inputs", bias_opts.identical_inputs);

  AlphaStudyOptions alpha_opts;
  auto* alpha = app.add_subcommand("alpha-study", "accuracy, insensitivity and bias across alpha");
  add_sim_flags(*alpha, alpha_opts.sim);
  add_common(*alpha, common, "alpha_study.csv");
  alpha->add_option("--rankers", alpha_opts.rankers)->capture_default_str();
  alpha->add_option("--length", alpha_opts.length)->capture_default_str();
  alpha->add_option("--alphas", alpha_opts.alphas)->delimiter(',')->capture_default_str();

  PvalueCompareOptions pv_opts;
  auto* pv = app.add_subcommand("pvalue-compare",
                                "p-value versus users, paired multileaving against A/B "
                                "(synthetic population)");
  add_common(*pv, common, "pvalue_compare.csv");
  pv->add_option("--algorithms", pv_opts.algorithms)->capture_default_str();
  pv->add_option("--users", pv_opts.users)->capture_default_str();
  pv->add_option("--length", pv_opts.length)->capture_default_str();
  pv->add_option("--candidates", pv_opts.candidates)->capture_default_str();
  pv->add_option("--click-bias", pv_opts.click_bias)->capture_default_str();
  pv->add_option("--effect", pv_opts.effect, "quality spread between worst and best algorithm")
      ->capture_default_str();
  pv->add_option("--base-ctr", pv_opts.base_ctr)->capture_default_str();
  pv->add_option("--heterogeneity", pv_opts.heterogeneity, "stddev of log click propensity")
      ->capture_default_str();
  pv->add_option("--mismatch-click-ratio", pv_opts.mismatch_click_ratio)->capture_default_str();
  pv->add_option("--activity-shape", pv_opts.activity_shape, "Pareto shape of impressions per user")
      ->capture_default_str();
  pv->add_option("--max-impressions", pv_opts.max_impressions)->capture_default_str();
  pv->add_option("--group-bias-algorithm", pv_opts.group_bias_algorithm,
                 "A/B group with less active users (-1: none)")
      ->capture_default_str();
  pv->add_option("--group-bias-factor", pv_opts.group_bias_factor)->capture_default_str();
  pv->add_option("--grid", pv_opts.grid, "user counts N")->delimiter(',');
  pv->add_option("--resamples", pv_opts.resamples)->capture_default_str();
  pv->add_option("--seed", pv_opts.seed)->capture_default_str();

  ServeOptions serve_opts;
  auto* srv = app.add_subcommand("serve", "run the HTTP comparison service");
  srv->add_option("--host", serve_opts.host)->envname("MULTILEAVE_HOST")->capture_default_str();
  srv->add_option("--port", serve_opts.port)->envname("MULTILEAVE_PORT")->capture_default_str();
  srv->add_option("--log-path", serve_opts.log_path)
      ->envname("MULTILEAVE_LOG_PATH")
      ->capture_default_str();
  srv->add_option("--method", serve_opts.method, "default method: TDM or GOM")
      ->envname("MULTILEAVE_METHOD")
      ->capture_default_str();
  srv->add_option("--credit", serve_opts.credit, "default credit function")
      ->envname("MULTILEAVE_CREDIT")
      ->capture_default_str();
  srv->add_option("--candidates", serve_opts.candidates)->capture_default_str();
  srv->add_option("--alpha", serve_opts.alpha)->capture_default_str();
  srv->add_option("--session-ttl", serve_opts.ttl_seconds, "idle seconds before eviction")
      ->envname("MULTILEAVE_SESSION_TTL")
      ->capture_default_str();
  srv->add_option("--token", serve_opts.token, "static bearer token")->envname("MULTILEAVE_TOKEN");
  srv->add_flag("--sync", serve_opts.sync, "fsync the log on every event");

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  replay->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);
  add_common(*replay, common, "");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    OutputPaths out{common.out};
    for (const auto* sub : app.get_subcommands()) {
      const auto* option = sub->get_option_no_throw("--out");
      if (out.csv.empty() && option != nullptr) out.csv = option->get_default_str();
    }
    nlohmann::json manifest;
    if (rankers->parsed()) {
      manifest = run_sweep_rankers(rankers_opts, out, common.threads);
    } else if (lengths->parsed()) {
      manifest = run_sweep_length(length_opts, out, common.threads);
    } else if (ins->parsed()) {
      manifest = run_insensitivity(ins_opts, out, common.threads);
    } else if (bias->parsed()) {
      manifest = run_bias(bias_opts, out, common.threads);
    } else if (alpha->parsed()) {
      manifest = run_alpha_study(alpha_opts, out, common.threads);
    } else if (pv->parsed()) {
      manifest = run_pvalue_compare(pv_opts, out, common.threads);
    } else if (srv->parsed()) {
      return serve(serve_opts);
    } else if (replay->parsed()) {
      std::ifstream in(manifest_path);
      const auto recorded = nlohmann::json::parse(in, nullptr, false);
      if (recorded.is_discarded()) throw UsageError(manifest_path + " is not valid JSON");
      OutputPaths target = out;
      if (target.csv.empty()) target.csv = recorded.at("outputs").at("csv").get<std::string>();
      manifest = replay_manifest(recorded, target, common.threads);
    }
    std::cerr << fmt::format("wrote {} in {:.1f} s\n", manifest["outputs"]["csv"].get<std::string>(),
                             manifest["duration_seconds"].get<double>());
    if (manifest.contains("summary")) std::cout << manifest["summary"].dump(2) << '\n';
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeExit;
  }
}
