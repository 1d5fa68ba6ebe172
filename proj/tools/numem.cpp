// numem: induce prototypes, train numeral-aware embeddings, evaluate, export.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "numem/composer.hpp"
#include "numem/corpus.hpp"
#include "numem/errors.hpp"
#include "numem/eval.hpp"
#include "numem/model_io.hpp"
#include "numem/numtransform.hpp"
#include "numem/prototypes.hpp"
#include "numem/sgns.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kFormat = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("numem");
  logger->set_pattern("[%H:%M:%S] %^%l%$ %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("NUMEM_LOG")) {
    const std::string v = env;
    if (v == "quiet") {
      spdlog::set_level(spdlog::level::err);
    } else if (v == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else if (v != "info") {
      spdlog::warn("unknown NUMEM_LOG value '{}', using info", v);
    }
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw numem::InputError("cannot read " + path);
  return in;
}

std::vector<numem::Sentence> load_corpus(const std::string& path, bool lowercase) {
  auto in = open_in(path);
  return numem::read_corpus(in, {lowercase});
}

// One numeral per line; the surface is kept for export.
std::vector<numem::ExportNumeral> read_numeral_list(const std::string& path) {
  auto in = open_in(path);
  std::vector<numem::ExportNumeral> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string surface;
    if (!(ss >> surface)) continue;
    auto v = numem::parse_numeral(surface);
    if (!v) throw numem::FormatError("not a numeral: '" + surface + "'", lineno);
    out.push_back({surface, *v});
  }
  return out;
}

// Written beside every output as <output>.manifest.json, via rename so a
// reader never sees a partial file.
struct Manifest {
  json doc;

  Manifest(const std::string& command, const std::vector<std::string>& argv) {
    doc["command"] = command;
    doc["version"] = kVersion;
    doc["argv"] = argv;
    doc["config"] = json::object();
    doc["inputs"] = json::object();
    doc["outputs"] = json::object();
  }

  void write_beside(const std::string& output) const {
    const fs::path target = output + ".manifest.json";
    const fs::path tmp = output + ".manifest.json.tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw numem::InputError("cannot write " + tmp.string());
      out << doc.dump(2) << '\n';
      if (!out) throw numem::InputError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
  }
};

// ---------------------------------------------------------------------------

struct InduceArgs {
  std::string corpus, output;
  std::string method = "som";
  std::string prototypes = "auto";
  std::string stage = "dataset";
  std::string init = "kmeans";
  std::string em = "soft";
  std::uint64_t seed = 1;
  bool lowercase = false;
};

int cmd_induce(const InduceArgs& a, const std::vector<std::string>& argv) {
  const auto method = numem::parse_prototype_method(a.method);
  const auto stage = numem::parse_transform_stage(a.stage);
  const auto init = numem::parse_gmm_init(a.init);
  const auto em = numem::parse_em_mode(a.em);

  const auto corpus = load_corpus(a.corpus, a.lowercase);
  const auto numbers = numem::collect_numbers(corpus);
  if (numbers.empty()) throw numem::InputError("corpus contains no numerals: " + a.corpus);
  const auto staged = numem::apply_stage(numbers, stage);

  std::size_t m = 0;
  if (a.prototypes == "auto") {
    m = numem::default_prototype_count(staged.values);
  } else {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(a.prototypes, &pos);
    } catch (const std::exception&) {
    }
    if (v < 1 || pos != a.prototypes.size()) {
      throw numem::InputError("--prototypes expects a positive integer or 'auto'");
    }
    m = static_cast<std::size_t>(v);
  }
  spdlog::info("{} numerals, inducing {} {} prototypes ({} stage)", numbers.size(), m, a.method,
               a.stage);

  numem::PrototypeModel model;
  numem::EmTrace trace;
  if (method == numem::PrototypeMethod::Som) {
    model = numem::PrototypeModel::from_som(numem::train_som(staged.values, m, {}, a.seed), stage);
  } else {
    numem::GmmInitOptions init_opts;
    init_opts.strategy = init;
    auto gmm = numem::init_gmm(staged.values, m, init_opts, a.seed);
    numem::EmOptions em_opts;
    em_opts.mode = em;
    em_opts.seed = a.seed;
    gmm = numem::em_fit(std::move(gmm), staged.values, em_opts, &trace);
    spdlog::info("EM: {} iterations, converged={}, reseeds={}", trace.iterations,
                 trace.converged, trace.reseeds);
    model = numem::PrototypeModel::from_gmm(gmm, stage);
  }

  {
    std::ofstream out(a.output);
    if (!out) throw numem::InputError("cannot write " + a.output);
    numem::write_prototypes(out, model);
  }

  Manifest man("induce", argv);
  man.doc["config"] = {{"method", a.method},   {"prototypes", m},  {"log_stage", a.stage},
                       {"init", a.init},       {"em", a.em},       {"lowercase", a.lowercase}};
  man.doc["seed"] = a.seed;
  man.doc["inputs"]["corpus"] = a.corpus;
  man.doc["outputs"]["prototypes"] = a.output;
  if (method == numem::PrototypeMethod::Gmm) {
    man.doc["em_trace"] = {{"iterations", trace.iterations},
                           {"converged", trace.converged},
                           {"reseeds", trace.reseeds}};
  }
  man.write_beside(a.output);
  spdlog::info("wrote {}", a.output);
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, output, prototypes, vocab_out;
  std::string mode = "prototype";
  numem::TrainConfig cfg;
  bool binary = false;
  bool lowercase = false;
};

int cmd_train(TrainArgs a, const std::vector<std::string>& argv) {
  a.cfg.mode = numem::parse_embedding_mode(a.mode);
  a.cfg.validate();

  std::optional<numem::PrototypeModel> protos;
  if (a.cfg.mode == numem::EmbeddingMode::Prototype) {
    if (a.prototypes.empty()) throw numem::InputError("prototype mode needs --prototypes FILE");
    auto in = open_in(a.prototypes);
    protos = numem::read_prototypes(in);
  } else if (!a.prototypes.empty()) {
    spdlog::warn("--prototypes ignored in {} mode", a.mode);
  }

  const auto corpus = load_corpus(a.corpus, a.lowercase);
  numem::TrainStats stats;
  const auto model = numem::train(corpus, a.cfg, std::move(protos), &stats);
  spdlog::info("trained {} steps, final epoch loss {:.6g}", stats.steps,
               stats.epoch_loss.empty() ? 0.0 : stats.epoch_loss.back());

  numem::save_model(a.output, model, a.binary ? numem::ModelFormat::Binary : numem::ModelFormat::Text);
  if (!a.vocab_out.empty()) {
    std::ofstream out(a.vocab_out);
    if (!out) throw numem::InputError("cannot write " + a.vocab_out);
    model.vocab.write(out);
  }

  Manifest man("train", argv);
  const auto& c = a.cfg;
  man.doc["config"] = {{"mode", a.mode},
                       {"dim", c.dim},
                       {"window", c.window},
                       {"negatives", c.negatives},
                       {"epochs", c.epochs},
                       {"lr", c.lr},
                       {"min_count", c.min_count},
                       {"max_vocab", c.max_vocab},
                       {"threads", c.threads},
                       {"beta", c.beta},
                       {"format", a.binary ? "binary" : "text"},
                       {"lowercase", a.lowercase}};
  man.doc["seed"] = c.seed;
  man.doc["inputs"]["corpus"] = a.corpus;
  if (!a.prototypes.empty()) man.doc["inputs"]["prototypes"] = a.prototypes;
  man.doc["outputs"]["model"] = a.output;
  if (!a.vocab_out.empty()) man.doc["outputs"]["vocab"] = a.vocab_out;
  man.doc["stats"] = {{"steps", stats.steps}, {"epoch_loss", stats.epoch_loss}};
  man.write_beside(a.output);
  spdlog::info("wrote {}", a.output);
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string task, model, fixture, lexicon, classes, targets, report;
  std::string score = "sa";
  std::string distance = "euclidean";
  bool normalize = false;
  bool full_vocab = false;
  std::uint64_t seed = 1;
};

numem::Distance parse_distance(const std::string& s) {
  if (s == "euclidean") return numem::Distance::Euclidean;
  if (s == "cosine") return numem::Distance::Cosine;
  throw numem::InputError("unknown distance '" + s + "'");
}

numem::ScoreKind parse_score(const std::string& s) {
  if (s == "sa") return numem::ScoreKind::SA;
  if (s == "sb") return numem::ScoreKind::SB;
  throw numem::InputError("unknown score '" + s + "'");
}

const std::string& require(const std::string& value, const char* flag, const std::string& task) {
  if (value.empty()) throw numem::InputError("task " + task + " needs " + flag);
  return value;
}

void add_contrast(numem::Report& r, const numem::ContrastReport& c) {
  r.add("OVA", c.ova);
  r.add("SC", c.sc);
  r.add("BC", c.bc);
  r.add("AVGR", c.avgr);
  r.add("targets", static_cast<double>(c.targets));
  r.add("nearest_ties", static_cast<double>(c.nearest_ties));
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  static const std::vector<std::string> tasks = {"numeral-prediction", "magnitude", "numeration",
                                                 "magnitude-class", "word-sim"};
  if (std::find(tasks.begin(), tasks.end(), a.task) == tasks.end()) {
    throw numem::InputError("unknown task '" + a.task + "'");
  }
  const auto distance = parse_distance(a.distance);
  const auto score = parse_score(a.score);
  const auto model = numem::load_model(a.model);

  numem::Report report;
  report.title = a.task;
  report.add("mode", std::string(numem::to_string(model.mode)));

  if (a.task == "numeral-prediction") {
    auto in = open_in(require(a.fixture, "--fixture", a.task));
    const auto instances = numem::read_prediction_fixture(in);
    numem::PredictionOptions opts;
    opts.score = score;
    opts.normalize = a.normalize;
    opts.full_vocab = a.full_vocab;
    const auto res = numem::evaluate_numeral_prediction(model, instances, opts);
    report.add("score", a.score);
    report.add("AVGR", res.report.avgr);
    report.add("MdAE", res.report.mdae);
    report.add("MdAPE", res.report.mdape);
    report.add("instances", static_cast<double>(res.report.ranks.size()));
    report.add("candidates", static_cast<double>(res.candidates.size()));
    report.add("skipped", static_cast<double>(res.skipped));
    report.add("zero_targets", static_cast<double>(res.report.zero_targets));
  } else if (a.task == "magnitude") {
    const auto list = read_numeral_list(require(a.targets, "--targets", a.task));
    std::vector<double> values;
    for (const auto& n : list) values.push_back(n.value);
    const auto rep = numem::ova_sc_bc(
        values,
        [&](double n) {
          const auto v = numem::numeral_vector(model, n, numem::Side::Input);
          return std::vector<double>(v.begin(), v.end());
        },
        distance);
    add_contrast(report, rep);
  } else if (a.task == "numeration") {
    const auto list = read_numeral_list(require(a.targets, "--targets", a.task));
    std::vector<double> values;
    for (const auto& n : list) values.push_back(n.value);
    auto in = open_in(require(a.lexicon, "--lexicon", a.task));
    const auto lexicon = numem::read_lexicon(in);
    const auto res = numem::numeration_eval(values, lexicon, model, distance);
    add_contrast(report, res.report);
    report.add("dropped_words", static_cast<double>(res.dropped_words));
  } else if (a.task == "magnitude-class") {
    auto fin = open_in(require(a.fixture, "--fixture", a.task));
    const auto instances = numem::read_prediction_fixture(fin);
    auto cin = open_in(require(a.classes, "--classes", a.task));
    const auto labeled = numem::read_magnitude_classes(cin);
    const auto rep =
        numem::evaluate_magnitude_classes(model, instances, labeled, score, a.normalize, a.seed);
    report.add("score", a.score);
    report.add("AVGR", rep.avgr);
    report.add("micro_F1", rep.micro_f1);
    report.add("macro_F1", rep.macro_f1);
    report.add("instances", static_cast<double>(rep.instances));
    report.add("skipped", static_cast<double>(rep.skipped));
  } else {
    auto in = open_in(require(a.fixture, "--fixture", a.task));
    const auto res = numem::evaluate_word_similarity(model, in);
    report.add("spearman", res.rho);
    report.add("pairs", static_cast<double>(res.pairs));
    report.add("skipped", static_cast<double>(res.skipped));
  }

  report.write_table(std::cout);
  if (!a.report.empty()) {
    std::ofstream out(a.report);
    if (!out) throw numem::InputError("cannot write " + a.report);
    report.write_kv(out);
    Manifest man("eval", argv);
    man.doc["config"] = {{"task", a.task},          {"score", a.score},
                         {"normalize", a.normalize}, {"full_vocab", a.full_vocab},
                         {"distance", a.distance}};
    man.doc["seed"] = a.seed;
    man.doc["inputs"] = {{"model", a.model},     {"fixture", a.fixture}, {"lexicon", a.lexicon},
                         {"classes", a.classes}, {"targets", a.targets}};
    man.doc["outputs"]["report"] = a.report;
    man.write_beside(a.report);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string model, output, numerals;
};

int cmd_export(const ExportArgs& a, const std::vector<std::string>& argv) {
  const auto model = numem::load_model(a.model);
  std::vector<numem::ExportNumeral> numerals;
  if (!a.numerals.empty()) numerals = read_numeral_list(a.numerals);
  if (a.output.empty()) {
    numem::export_word2vec(std::cout, model, numerals);
    return kOk;
  }
  {
    std::ofstream out(a.output);
    if (!out) throw numem::InputError("cannot write " + a.output);
    numem::export_word2vec(out, model, numerals);
  }
  Manifest man("export", argv);
  man.doc["inputs"] = {{"model", a.model}, {"numerals", a.numerals}};
  man.doc["outputs"]["embeddings"] = a.output;
  man.write_beside(a.output);
  return kOk;
}

struct InspectArgs {
  std::string model;
  std::string numeral;
  std::size_t top = 10;
};

int cmd_inspect(const InspectArgs& a) {
  const auto model = numem::load_model(a.model);
  std::cout << "mode " << numem::to_string(model.mode) << "\ndim " << model.dim << "\nvocab "
            << model.vocab.size() << "\nprototypes " << model.prototype_count() << '\n';
  if (a.numeral.empty()) return kOk;

  const auto n = numem::parse_numeral(a.numeral);
  if (!n) throw numem::InputError("not a numeral: '" + a.numeral + "'");
  if (model.mode == numem::EmbeddingMode::Prototype) {
    const auto w = model.numeral_weights(*n);
    std::cout << "weights\n";
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double p = numem::from_induction_space(model.prototypes->values[k],
                                                   model.prototypes->stage);
      std::printf("  %2zu  %-14.6g %.6f\n", k, p, w[k]);
    }
  }
  const auto v32 = numem::numeral_vector(model, *n, numem::Side::Input);
  const std::vector<double> v(v32.begin(), v32.end());
  std::vector<std::pair<double, std::uint32_t>> sims;
  for (auto i = static_cast<std::uint32_t>(model.vocab.reserved_count()); i < model.vocab.size();
       ++i) {
    const auto w32 = numem::word_vector(model, i, numem::Side::Input);
    const std::vector<double> w(w32.begin(), w32.end());
    sims.emplace_back(1.0 - numem::vector_distance(v, w, numem::Distance::Cosine), i);
  }
  const std::size_t q = std::min(a.top, sims.size());
  std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(q), sims.end(),
                    [](const auto& x, const auto& y) {
                      return x.first != y.first ? x.first > y.first : x.second < y.second;
                    });
  std::cout << "nearest\n";
  for (std::size_t i = 0; i < q; ++i) {
    std::printf("  %-20s %.4f\n", model.vocab.entry(sims[i].second).surface.c_str(), sims[i].first);
  }
  return kOk;
}

int run(int argc, char** argv);

int cmd_replay(const std::string& manifest_path) {
  auto in = open_in(manifest_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw numem::FormatError(std::string("malformed manifest: ") + e.what());
  }
  if (!doc.contains("argv") || !doc["argv"].is_array()) {
    throw numem::FormatError("manifest has no argv");
  }
  auto args = doc["argv"].get<std::vector<std::string>>();
  if (args.empty()) throw numem::FormatError("manifest argv is empty");
  std::vector<char*> ptrs;
  for (auto& s : args) ptrs.push_back(s.data());
  spdlog::info("replaying {}", doc.value("command", std::string("?")));
  return run(static_cast<int>(ptrs.size()), ptrs.data());
}

int run(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"Numeral-aware word embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  InduceArgs ia;
  auto* induce = app.add_subcommand("induce", "Induce numeral prototypes from a corpus");
  induce->add_option("corpus", ia.corpus, "Corpus, one sentence per line")->required();
  induce->add_option("-o,--output", ia.output, "Prototype file")->required();
  induce->add_option("--method", ia.method, "som|gmm")->capture_default_str();
  induce->add_option("--prototypes", ia.prototypes, "Count or 'auto'")->capture_default_str();
  induce->add_option("--log-stage", ia.stage, "dataset|similarity")->capture_default_str();
  induce->add_option("--init", ia.init, "GMM init: random|som|kmeans")->capture_default_str();
  induce->add_option("--em", ia.em, "soft|hard")->capture_default_str();
  induce->add_option("--seed", ia.seed)->capture_default_str();
  induce->add_flag("--lowercase", ia.lowercase);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train embeddings");
  train->add_option("corpus", ta.corpus)->required();
  train->add_option("-o,--output", ta.output, "Model file")->required();
  train->add_option("--prototypes", ta.prototypes, "Prototype file (prototype mode)");
  train->add_option("--mode", ta.mode, "prototype|numastok|fixed")->capture_default_str();
  train->add_option("--dim", ta.cfg.dim)->capture_default_str();
  train->add_option("--window", ta.cfg.window)->capture_default_str();
  train->add_option("--negatives", ta.cfg.negatives)->capture_default_str();
  train->add_option("--epochs", ta.cfg.epochs)->capture_default_str();
  train->add_option("--lr", ta.cfg.lr)->capture_default_str();
  train->add_option("--min-count", ta.cfg.min_count)->capture_default_str();
  train->add_option("--max-vocab", ta.cfg.max_vocab)->capture_default_str();
  train->add_option("--max-numeral-vocab", ta.cfg.max_numeral_vocab, "numastok numeral cap");
  train->add_option("--beta", ta.cfg.beta, "SOM similarity exponent")->capture_default_str();
  train->add_option("--seed", ta.cfg.seed)->capture_default_str();
  train->add_option("--threads", ta.cfg.threads, "1 = deterministic")->capture_default_str();
  train->add_flag("--binary", ta.binary, "Binary float32 matrices");
  train->add_option("--vocab-out", ta.vocab_out);
  train->add_flag("--lowercase", ta.lowercase);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a model");
  eval->add_option("task", ea.task,
                   "numeral-prediction|magnitude|numeration|magnitude-class|word-sim")
      ->required();
  eval->add_option("-m,--model", ea.model)->required();
  eval->add_option("--fixture", ea.fixture, "Prediction fixture or word-sim pairs");
  eval->add_option("--targets", ea.targets, "Numerals, one per line");
  eval->add_option("--lexicon", ea.lexicon, "word<TAB>value");
  eval->add_option("--classes", ea.classes, "numeral<TAB>class");
  eval->add_option("--score", ea.score, "sa|sb")->capture_default_str();
  eval->add_flag("--normalize", ea.normalize, "S_A log-partition term");
  eval->add_flag("--full-vocab", ea.full_vocab, "S_A partition over the model vocabulary");
  eval->add_option("--distance", ea.distance, "euclidean|cosine")->capture_default_str();
  eval->add_option("--seed", ea.seed)->capture_default_str();
  eval->add_option("--report", ea.report, "key=value report file");

  ExportArgs xa;
  auto* exp = app.add_subcommand("export", "Write word2vec-style text embeddings");
  exp->add_option("-m,--model", xa.model)->required();
  exp->add_option("-o,--output", xa.output, "Default: stdout");
  exp->add_option("--numerals", xa.numerals, "Numerals to compose, one per line");

  InspectArgs na;
  auto* inspect = app.add_subcommand("inspect", "Show model summary and numeral neighbours");
  inspect->add_option("-m,--model", na.model)->required();
  inspect->add_option("--numeral", na.numeral);
  inspect->add_option("--top", na.top)->capture_default_str();

  std::string manifest;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*induce) return cmd_induce(ia, args);
  if (*train) return cmd_train(ta, args);
  if (*eval) return cmd_eval(ea, args);
  if (*exp) return cmd_export(xa, args);
  if (*inspect) return cmd_inspect(na);
  return cmd_replay(manifest);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  try {
    return run(argc, argv);
  } catch (const numem::FormatError& e) {
    spdlog::error("{}", e.what());
    return kFormat;
  } catch (const numem::InputError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const std::logic_error& e) {
    spdlog::critical("internal error: {}", e.what());
    return kInternal;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  }
}
