// ppm: train, predict, evaluate, serve and gen-log front end.
// Exit status: 0 ok, 1 user error, 2 internal error.

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ppm/archive.hpp"
#include "ppm/evaluation.hpp"
#include "ppm/generator.hpp"
#include "ppm/server.hpp"
#include "ppm/service.hpp"

using namespace ppm;

namespace {

struct UserError : Error {
  using Error::Error;
};

EventLog read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open log '" + path + "'");
  return parse_log(in);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write '" + path + "'");
  out << text;
}

std::string hours(double seconds) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << seconds / 3600.0 << " h";
  return s.str();
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string log, out, dot;
  std::string kind = "dats";
  std::string abstraction = "set";
  std::string statistic = "mean";
  std::uint64_t seed = 42;
  std::vector<double> C_grid{0.1, 1, 10, 100};
  std::vector<double> gamma_grid{0.01, 0.1, 1};
  bool no_grid = false;
  double C = 10.0, gamma = 0.1;
  std::size_t max_examples = 600;
  std::size_t transition_max_examples = 600;
  bool no_history = false;
  bool no_scaling = false;
};

TrainOptions train_options(const TrainArgs& a) {
  TrainOptions o;
  o.kind = parse_predictor_kind(a.kind);
  o.abstraction = StateAbstraction::parse(a.abstraction);
  o.statistic = parse_vda_statistic(a.statistic);
  o.seed = a.seed;
  o.scale_numeric = !a.no_scaling;
  o.keep_history = !a.no_history;
  o.svr.grid = !a.no_grid;
  o.svr.C_grid = a.C_grid;
  o.svr.gamma_grid = a.gamma_grid;
  o.svr.C = a.C;
  o.svr.gamma = a.gamma;
  o.svr.max_examples = a.max_examples;
  o.transition_svr.max_examples = a.transition_max_examples;
  return o;
}

void add_train_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--kind", a.kind, "predictor: vda, svr, svr_ts or dats")->capture_default_str();
  cmd->add_option("--abstraction", a.abstraction, "state abstraction: set, multiset or seq, optional :horizon")
      ->capture_default_str();
  cmd->add_option("--statistic", a.statistic, "vda state statistic: mean or median")->capture_default_str();
  cmd->add_option("--seed", a.seed, "training seed")->capture_default_str();
  cmd->add_option("--grid-C", a.C_grid, "C values for the grid search")->delimiter(',')->capture_default_str();
  cmd->add_option("--grid-gamma", a.gamma_grid, "rbf gamma values for the grid search")->delimiter(',')->capture_default_str();
  cmd->add_flag("--no-grid", a.no_grid, "skip the grid search and use --C and --gamma");
  cmd->add_option("--C", a.C, "C without grid search")->capture_default_str();
  cmd->add_option("--gamma", a.gamma, "gamma without grid search")->capture_default_str();
  cmd->add_option("--max-examples", a.max_examples, "subsample cap for the svr training set")->capture_default_str();
  cmd->add_option("--transition-max-examples", a.transition_max_examples, "subsample cap per dats transition")
      ->capture_default_str();
  cmd->add_flag("--no-history", a.no_history, "do not store training traces in the archive");
  cmd->add_flag("--no-scaling", a.no_scaling, "keep numeric attributes unscaled");
}

int cmd_train(const TrainArgs& a) {
  auto log = read_log(a.log);
  auto opt = train_options(a);
  auto m = train(log, opt);
  save_model(m, a.out);
  std::cout << "trained " << to_string(m.kind) << " on " << log.size() << " traces, " << log.event_count()
            << " events\n";
  std::cout << "feature dimension: " << m.schema.dimension() << "\n";
  if (m.ts) {
    std::cout << "abstraction: " << m.ts->abstraction().to_string() << "\n";
    std::cout << "states: " << m.ts->state_count() << ", transitions: " << m.ts->transitions().size()
              << ", accepting: " << m.ts->accepting_count() << "\n";
    if (!a.dot.empty()) write_text(a.dot, to_dot(*m.ts));
  }
  auto describe = [](const TimeRegressor& r) {
    std::ostringstream s;
    s << r.examples << " examples, ";
    if (r.constant) s << "constant " << format_number(r.value);
    else s << "C=" << format_number(r.model.C) << " gamma=" << format_number(r.model.kernel.gamma)
           << " sv=" << r.model.support_vectors.size() << (r.model.converged ? "" : " (not converged)");
    return s.str();
  };
  if (m.kind == PredictorKind::svr || m.kind == PredictorKind::svr_ts) std::cout << "regressor: " << describe(m.regressor) << "\n";
  if (m.kind == PredictorKind::dats) {
    std::cout << "naive Bayes states: " << m.nb.size() << "\n";
    for (std::size_t t = 0; t < m.transition_regressors.size(); ++t) {
      const auto& tr = m.ts->transition(t);
      std::cout << "  " << m.ts->state(tr.source).to_string() << " -" << tr.label << "-> "
                << m.ts->state(tr.target).to_string() << ": " << describe(m.transition_regressors[t]) << "\n";
    }
  }
  std::cout << "archive: " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string model, trace, case_id, deadline;
  std::size_t prefix = 0;
  bool json_only = false;
};

/// Events of one case, attributes re-keyed onto the model's schema.
std::vector<Event> read_trace(const PredictArgs& a, const EncodingSchema& schema) {
  auto log = read_log(a.trace);
  const Trace* t = nullptr;
  if (!a.case_id.empty()) {
    for (const auto& x : log.traces())
      if (x.case_id == a.case_id) t = &x;
    if (!t) throw UserError("case '" + a.case_id + "' not found in " + a.trace);
  } else {
    if (log.size() != 1) throw UserError("trace file holds " + std::to_string(log.size()) + " cases; pick one with --case");
    t = &log.traces()[0];
  }
  std::vector<std::size_t> slot;
  for (const auto& d : log.schema()) {
    auto it = std::find_if(schema.attributes.begin(), schema.attributes.end(),
                           [&](const AttributeEncoder& e) { return e.name == d.name; });
    if (it == schema.attributes.end()) throw UserError("attribute '" + d.name + "' is unknown to the model");
    if (it->kind != d.kind) throw UserError("attribute '" + d.name + "' has a different kind in the model");
    slot.push_back(static_cast<std::size_t>(it - schema.attributes.begin()));
  }
  std::vector<Event> out;
  for (const auto& e : t->events) {
    Event x{e.activity, e.case_id, e.timestamp, std::vector<AttributeValue>(schema.attributes.size())};
    for (std::size_t i = 0; i < slot.size(); ++i) x.attributes[slot[i]] = e.attributes[i];
    out.push_back(std::move(x));
  }
  if (a.prefix > 0 && a.prefix < out.size()) out.resize(a.prefix);
  return out;
}

int cmd_predict(const PredictArgs& a) {
  auto m = load_model(a.model);
  Query q;
  q.events = read_trace(a, m.schema);
  if (!a.deadline.empty()) {
    q.deadline = parse_timestamp(a.deadline);
    if (!q.deadline) throw UserError("cannot parse deadline '" + a.deadline + "'");
  }
  auto ans = answer_query(m, q);
  auto j = answer_json(ans, a.model, m);
  if (a.json_only) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "events: " << q.events.size() << " (last: " << q.events.back().activity << " at "
            << format_timestamp(q.events.back().timestamp) << ")\n";
  std::cout << "remaining: " << j.at("remaining_seconds").get<std::int64_t>() << " s (" << hours(ans.remaining.seconds)
            << ")\n";
  std::cout << "predicted completion: " << format_timestamp(ans.predicted_completion) << "\n";
  if (q.deadline)
    std::cout << "deadline: " << format_timestamp(*q.deadline) << (ans.alarm ? "  ALARM: predicted to miss it" : "  met")
              << "\n";
  if (ans.remaining.safety_used)
    std::cout << "note: the trace does not fit the model; safety mechanism predicted from the first "
              << ans.remaining.prefix_length << " of " << q.events.size() << " events\n";
  else if (ans.remaining.fallback)
    std::cout << "note: no prefix of the trace fits the model; the global mean was used\n";
  else if (!ans.remaining.fitting)
    std::cout << "note: the trace does not fit the model; state features come from state similarity\n";
  if (m.ts) {
    std::cout << "path:";
    if (ans.path.activities.empty()) std::cout << " (complete)";
    for (const auto& x : ans.path.activities) std::cout << " " << x;
    std::cout << "  p=" << format_fixed(ans.path.probability, 4) << "\n";
  }
  for (const auto& s : ans.similar) {
    std::cout << (s.slot == SimilarTrace::Slot::fastest_with_prefix ? "fastest with this prefix: " : "fastest on this path: ")
              << s.case_id << " (" << s.remaining_seconds << " s left)\n";
  }
  std::cout << j.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  TrainArgs train;
  std::vector<std::string> kinds{"vda", "svr", "svr_ts", "dats"};
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  bool paths = false;
  bool random = false;
  std::size_t draws = 100000;
  double remove_fraction = 0.0;
  std::string remove_activity;
  std::uint64_t removal_seed = 0;
  std::string json_out, tsv_out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  auto log = read_log(a.train.log);
  EvaluationOptions e;
  e.folds = a.folds;
  e.seed = a.seed;
  e.random_draws = a.draws;
  if (a.remove_fraction > 0.0 || !a.remove_activity.empty()) {
    VariantRemoval r;
    r.fraction = a.remove_fraction;
    r.seed = a.removal_seed;
    if (!a.remove_activity.empty()) r.activity = a.remove_activity;
    e.removal = r;
  }
  std::vector<EvaluationReport> reports;
  for (const auto& k : a.kinds) {
    auto args = a.train;
    args.kind = k;
    auto opt = train_options(args);
    auto eo = e;
    eo.path_metrics = a.paths && opt.kind != PredictorKind::svr;
    eo.random_baseline = a.random && eo.path_metrics;
    reports.push_back(cross_validate(log, opt, eo));
  }
  std::cout << "log: " << log.size() << " traces, " << a.folds << "-fold, seed " << a.seed << ", removal "
            << reports.front().removal << "\n";
  std::cout << format_time_table(reports);
  for (const auto& r : reports) {
    if (r.safety_used || r.non_fitting)
      std::cout << r.predictor << ": " << r.non_fitting << " non-fitting prefixes, safety mechanism used " << r.safety_used
                << " times, fallbacks " << r.fallbacks << "\n";
  }
  for (const auto& r : reports)
    if (!r.paths.empty()) std::cout << "\npaths (" << r.predictor << ")\n" << format_path_table(r);
  if (!a.json_out.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) j.push_back(to_json(r));
    write_text(a.json_out, j.dump(2) + "\n");
  }
  if (!a.tsv_out.empty()) {
    std::string tsv;
    for (const auto& r : reports)
      if (!r.paths.empty()) tsv += path_series_tsv(r);
    write_text(a.tsv_out, tsv);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// serve

struct ServeArgs {
  std::vector<std::string> models;
  std::string host = "127.0.0.1";
  int port = 8080;
};

httplib::Server* running_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  ModelRegistry registry;
  for (const auto& spec : a.models) {
    auto eq = spec.find('=');
    std::string id = eq == std::string::npos ? std::filesystem::path(spec).stem().string() : spec.substr(0, eq);
    std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    registry.put(id, load_model(path));
    std::cerr << "loaded model '" << id << "' from " << path << "\n";
  }
  httplib::Server server;
  install_routes(server, registry);
  running_server = &server;
  std::signal(SIGINT, [](int) { if (running_server) running_server->stop(); });
  std::signal(SIGTERM, [](int) { if (running_server) running_server->stop(); });
  if (!server.bind_to_port(a.host, a.port)) throw UserError("cannot bind " + a.host + ":" + std::to_string(a.port));
  std::cerr << "listening on http://" << a.host << ":" << a.port << "\n";
  server.listen_after_bind();
  running_server = nullptr;
  return 0;
}

// ---------------------------------------------------------------------------
// gen-log

struct GenArgs {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> cases;
};

int cmd_gen_log(const GenArgs& a) {
  std::ifstream in(a.spec, std::ios::binary);
  if (!in) throw UserError("cannot open generator spec '" + a.spec + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UserError(std::string("generator spec is not valid JSON: ") + e.what());
  }
  auto spec = generator_spec_from_json(j);
  if (a.seed) spec.seed = *a.seed;
  if (a.cases) spec.cases = *a.cases;
  auto log = generate_log(spec);
  if (a.out.empty() || a.out == "-") {
    serialize_log(log, std::cout);
  } else {
    write_text(a.out, serialize_log(log));
    std::cerr << "wrote " << log.size() << " traces, " << log.event_count() << " events to " << a.out << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive process monitoring: remaining time and future path of running cases"};
  app.set_config("--config", "", "INI/TOML file whose keys mirror the command-line flags");
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model and write its archive");
  train_cmd->add_option("--log", train_args.log, "event log CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("-o,--out", train_args.out, "model archive to write")->required();
  train_cmd->add_option("--dot", train_args.dot, "also write the transition system as Graphviz");
  add_train_flags(train_cmd, train_args);

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "predict remaining time and path of a running case");
  predict_cmd->add_option("--model", predict_args.model, "model archive")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--trace", predict_args.trace, "CSV with the running case")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--case", predict_args.case_id, "case id when the file holds several");
  predict_cmd->add_option("--prefix", predict_args.prefix, "use only the first N events");
  predict_cmd->add_option("--deadline", predict_args.deadline, "deadline timestamp; sets the alarm");
  predict_cmd->add_flag("--json", predict_args.json_only, "print only the JSON answer");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "k-fold cross-validation of one or more predictors");
  eval_cmd->add_option("--log", eval_args.train.log, "event log CSV")->required()->check(CLI::ExistingFile);
  add_train_flags(eval_cmd, eval_args.train);
  eval_cmd->add_option("--kinds", eval_args.kinds, "predictors to compare")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--folds", eval_args.folds, "number of folds")->capture_default_str();
  eval_cmd->add_option("--eval-seed", eval_args.seed, "fold assignment seed")->capture_default_str();
  eval_cmd->add_flag("--paths", eval_args.paths, "score the predicted future paths");
  eval_cmd->add_flag("--random-baseline", eval_args.random, "score random walks as well (with --paths)");
  eval_cmd->add_option("--draws", eval_args.draws, "random walks per fold in total")->capture_default_str();
  eval_cmd->add_option("--remove-fraction", eval_args.remove_fraction, "drop this share of variants from training")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--remove-activity", eval_args.remove_activity, "drop variants containing this activity");
  eval_cmd->add_option("--removal-seed", eval_args.removal_seed, "seed for picking the dropped variants");
  eval_cmd->add_option("--json-out", eval_args.json_out, "write the reports as JSON");
  eval_cmd->add_option("--tsv-out", eval_args.tsv_out, "write the path series as TSV");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "answer POST /predict, GET /models and GET /health");
  serve_cmd->add_option("--model", serve_args.models, "archive, or id=archive; repeatable")->required();
  serve_cmd->add_option("--host", serve_args.host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve_args.port, "port")->capture_default_str();

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-log", "generate a synthetic event log from a JSON spec");
  gen_cmd->add_option("--spec", gen_args.spec, "generator spec")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("-o,--out", gen_args.out, "CSV to write (stdout when omitted)");
  gen_cmd->add_option("--seed", gen_args.seed, "override the spec seed");
  gen_cmd->add_option("--cases", gen_args.cases, "override the number of cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*predict_cmd) return cmd_predict(predict_args);
    if (*eval_cmd) return cmd_evaluate(eval_args);
    if (*serve_cmd) return cmd_serve(serve_args);
    if (*gen_cmd) return cmd_gen_log(gen_args);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
