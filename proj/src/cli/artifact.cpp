#include "ucd/cli/artifact.hpp"

#include "ucd/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace ucd {

using nlohmann::json;

namespace {

json matrix_to_json(const grad::Matrix& m) {
  json data = json::array();
  for (grad::Index c = 0; c < m.cols(); ++c) {
    for (grad::Index r = 0; r < m.rows(); ++r) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

grad::Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<grad::Index>();
  const auto cols = j.at("cols").get<grad::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw DataError("matrix table has " + std::to_string(data.size()) + " entries, expected " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  grad::Matrix m(rows, cols);
  std::size_t k = 0;
  for (grad::Index c = 0; c < cols; ++c) {
    for (grad::Index r = 0; r < rows; ++r) m(r, c) = data[k++].get<double>();
  }
  return m;
}

json ids_to_json(const IdMap& ids) { return ids.ids(); }

IdMap ids_from_json(const json& j) {
  IdMap ids;
  for (const auto& s : j) ids.intern(s.get<std::string>());
  return ids;
}

}  // namespace

void save_artifact(const Artifact& a, const std::filesystem::path& path) {
  json header = {
      {"format", "ucd-artifact"},
      {"format_version", a.format_version},
      {"model", model_kind_name(a.model.kind)},
      {"latent_dim", a.model.latent_dim},
      {"hidden", a.model.hidden},
      {"students", a.shape.students},
      {"questions", a.shape.questions},
      {"concepts", a.shape.concepts},
      {"seed", a.train.seed},
      {"split_seed", a.split_seed},
      {"split", {a.ratios.train, a.ratios.validation, a.ratios.test}},
      {"best_epoch", a.best_epoch},
      {"best_val_auc", a.best_val_auc},
      {"best_val_acc", a.best_val_acc},
  };
  json config = {
      {"mc_samples", a.train.mc_samples},   {"zeta0", a.train.zeta0},
      {"zeta1", a.train.zeta1},             {"lr", a.train.learning_rate},
      {"batch_size", a.train.batch_size},   {"epochs", a.train.max_epochs},
      {"patience", a.train.patience},       {"pi", pi_schedule_name(a.train.pi_schedule)},
      {"kl_exact", a.train.kl_exact},
  };
  json variables = json::array();
  for (const auto& b : a.posterior.blocks) {
    json v = {
        {"name", b.name},
        {"role", role_name(b.role)},
        {"transform", b.transform.name()},
        {"lower", b.transform.lower()},
        {"decomposed", b.decomposed()},
        {"lambda_set", b.lambda_set},
        {"mu", matrix_to_json(b.mu)},
        {"eta", matrix_to_json(b.eta)},
    };
    if (b.transform.kind() == DomainKind::Interval) v["upper"] = b.transform.upper();
    if (b.decomposed()) v["tau"] = matrix_to_json(b.tau);
    variables.push_back(std::move(v));
  }
  json lambdas = json::array();
  for (const auto& l : a.posterior.lambdas) {
    const LambdaSet s = l.values();
    lambdas.push_back({{"raw0", l.raw0}, {"raw1", l.raw1}, {"lambda0", s.lambda0}, {"lambda1", s.lambda1}});
  }
  const json doc = {
      {"header", std::move(header)},
      {"config", std::move(config)},
      {"variables", std::move(variables)},
      {"lambdas", std::move(lambdas)},
      {"index", {{"students", ids_to_json(a.students)},
                 {"questions", ids_to_json(a.questions)},
                 {"concepts", a.concepts}}},
  };
  std::ofstream out(path);
  if (!out) throw DataError("cannot write artifact " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw DataError("failed writing artifact " + path.string());
}

Artifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open artifact " + path.string());
  Artifact a;
  try {
    const json doc = json::parse(in);
    const json& h = doc.at("header");
    if (h.at("format").get<std::string>() != "ucd-artifact") {
      throw DataError(path.string() + " is not a model artifact");
    }
    a.format_version = h.at("format_version").get<int>();
    if (a.format_version != kArtifactFormatVersion) {
      throw DataError(path.string() + ": unsupported artifact version " +
                      std::to_string(a.format_version));
    }
    a.model.kind = parse_model_kind(h.at("model").get<std::string>());
    a.model.latent_dim = h.at("latent_dim").get<int>();
    a.model.hidden = h.at("hidden").get<std::vector<int>>();
    a.shape = {h.at("students").get<grad::Index>(), h.at("questions").get<grad::Index>(),
               h.at("concepts").get<grad::Index>()};
    a.train.seed = h.at("seed").get<std::uint64_t>();
    a.split_seed = h.at("split_seed").get<std::uint64_t>();
    const auto ratios = h.at("split").get<std::vector<double>>();
    if (ratios.size() != 3) throw DataError("split ratios must have three entries");
    a.ratios = {ratios[0], ratios[1], ratios[2]};
    a.best_epoch = h.at("best_epoch").get<int>();
    a.best_val_auc = h.at("best_val_auc").get<double>();
    a.best_val_acc = h.at("best_val_acc").get<double>();

    const json& c = doc.at("config");
    a.train.mc_samples = c.at("mc_samples").get<int>();
    a.train.zeta0 = c.at("zeta0").get<double>();
    a.train.zeta1 = c.at("zeta1").get<double>();
    a.train.learning_rate = c.at("lr").get<double>();
    a.train.batch_size = c.at("batch_size").get<int>();
    a.train.max_epochs = c.at("epochs").get<int>();
    a.train.patience = c.at("patience").get<int>();
    a.train.pi_schedule = parse_pi_schedule(c.at("pi").get<std::string>());
    a.train.kl_exact = c.at("kl_exact").get<bool>();

    for (const auto& v : doc.at("variables")) {
      VariableBlock b;
      b.name = v.at("name").get<std::string>();
      b.role = parse_role(v.at("role").get<std::string>());
      b.transform = DomainTransform::parse(v.at("transform").get<std::string>(),
                                           v.at("lower").get<double>(), v.value("upper", 0.0));
      b.lambda_set = v.at("lambda_set").get<int>();
      b.mu = matrix_from_json(v.at("mu"));
      b.eta = matrix_from_json(v.at("eta"));
      if (b.eta.rows() != b.mu.rows() || b.eta.cols() != b.mu.cols()) {
        throw DataError("variable '" + b.name + "': mu and eta shapes differ");
      }
      if (b.decomposed()) {
        b.tau = matrix_from_json(v.at("tau"));
        if (b.tau.rows() != b.mu.rows() || b.tau.cols() != b.mu.cols()) {
          throw DataError("variable '" + b.name + "': tau shape differs from mu");
        }
      }
      a.posterior.blocks.push_back(std::move(b));
    }
    for (const auto& l : doc.at("lambdas")) {
      a.posterior.lambdas.push_back({l.at("raw0").get<double>(), l.at("raw1").get<double>()});
    }
    const json& idx = doc.at("index");
    a.students = ids_from_json(idx.at("students"));
    a.questions = ids_from_json(idx.at("questions"));
    a.concepts = idx.at("concepts").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError("malformed artifact " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("malformed artifact " + path.string() + ": " + e.what());
  }
  if (a.students.size() != a.shape.students || a.questions.size() != a.shape.questions ||
      static_cast<grad::Index>(a.concepts.size()) != a.shape.concepts) {
    throw DataError("artifact " + path.string() + ": index maps disagree with the header dimensions");
  }
  return a;
}

}  // namespace ucd
