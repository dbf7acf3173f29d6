#include "mrfdens/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mrfdens {

using nlohmann::json;

nlohmann::json factor_to_json(const HistogramFactor& f) {
  return json{{"V", f.V}, {"C", f.C}, {"weights", f.w}};
}

HistogramFactor factor_from_json(const nlohmann::json& j, int d, int b) {
  HistogramFactor f;
  f.d = d;
  f.b = b;
  f.V = j.at("V").get<std::vector<int>>();
  f.C = j.at("C").get<double>();
  f.w = j.at("weights").get<std::vector<double>>();
  f.validate();
  return f;
}

nlohmann::json hist_to_json(const ProductHistogram& h) {
  json factors = json::array();
  for (const auto& f : h.factors) factors.push_back(factor_to_json(f));
  return json{{"d", h.d}, {"b", h.b}, {"factors", factors}};
}

ProductHistogram hist_from_json(const nlohmann::json& j) {
  ProductHistogram h;
  h.d = j.at("d").get<int>();
  h.b = j.at("b").get<int>();
  for (const auto& jf : j.at("factors")) h.factors.push_back(factor_from_json(jf, h.d, h.b));
  h.validate();
  return h;
}

nlohmann::json candidates_to_json(const CandidateSet& c) {
  json densities = json::array();
  for (const auto& h : c.densities) densities.push_back(hist_to_json(h));
  return json{{"d", c.d}, {"b", c.b}, {"densities", densities}};
}

CandidateSet candidates_from_json(const nlohmann::json& j) {
  CandidateSet c;
  c.d = j.at("d").get<int>();
  c.b = j.at("b").get<int>();
  for (const auto& jh : j.at("densities")) c.densities.push_back(hist_from_json(jh));
  return c;
}

nlohmann::json model_to_json(const CliqueNetModel& m) {
  json nets = json::array();
  for (const auto& net : m.nets) {
    json jw = json::array();
    for (const auto& mat : net.W) jw.push_back(mat);
    json jv = json::array();
    for (const auto& vec : net.v) jv.push_back(vec);
    nets.push_back(json{{"widths", net.widths}, {"W", jw}, {"v", jv}, {"F", net.F}});
  }
  return json{{"d", m.d}, {"cliques", m.cliques}, {"nets", nets}};
}

CliqueNetModel model_from_json(const nlohmann::json& j) {
  CliqueNetModel m;
  m.d = j.at("d").get<int>();
  m.cliques = j.at("cliques").get<std::vector<std::vector<int>>>();
  for (const auto& jn : j.at("nets")) {
    ReluNet net = make_relunet(jn.at("widths").get<std::vector<int>>(), jn.at("F").get<double>());
    const auto jw = jn.at("W");
    const auto jv = jn.at("v");
    if (jw.size() != net.W.size() || jv.size() != net.v.size())
      throw std::invalid_argument("model json: layer count mismatch");
    for (std::size_t i = 0; i < net.W.size(); ++i) {
      auto mat = jw[i].get<std::vector<double>>();
      if (mat.size() != net.W[i].size())
        throw std::invalid_argument("model json: weight matrix size mismatch");
      net.W[i] = std::move(mat);
    }
    for (std::size_t i = 0; i < net.v.size(); ++i) {
      auto vec = jv[i].get<std::vector<double>>();
      if (vec.size() != net.v[i].size())
        throw std::invalid_argument("model json: shift vector size mismatch");
      net.v[i] = std::move(vec);
    }
    net.validate();
    m.nets.push_back(std::move(net));
  }
  m.validate();
  return m;
}

nlohmann::json potential_to_json(const PairPotential& p) {
  json j{{"kind", p.name()}};
  if (p.kind == PairPotential::Kind::cosine)
    j["a"] = p.a;
  else
    j["kappa"] = p.kappa;
  return j;
}

PairPotential potential_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cosine") return cosine_potential(j.value("a", 0.5));
  if (kind == "gauss") return gauss_potential(j.value("kappa", 20.0));
  throw std::invalid_argument("unknown potential kind: " + kind);
}

nlohmann::json rate_config_to_json(const RateConfig& cfg) {
  return json{{"estimator", rate_estimator_name(cfg.estimator)},
              {"d", cfg.d},
              {"psi", potential_to_json(cfg.psi)},
              {"chain_quad", cfg.chain_quad},
              {"ns", cfg.ns},
              {"seeds", cfg.seeds},
              {"b_scale", cfg.b_scale},
              {"C", cfg.C},
              {"error_q", cfg.error_q},
              {"threads", cfg.threads},
              {"budget", cfg.budget},
              {"net_F", cfg.net_F},
              {"net_hidden", cfg.net_hidden},
              {"train",
               json{{"steps", cfg.train.steps},
                    {"batch", cfg.train.batch},
                    {"norm_points", cfg.train.norm_points},
                    {"lr_start", cfg.train.lr_start},
                    {"lr_end", cfg.train.lr_end},
                    {"clamp_bound", cfg.train.clamp_bound},
                    {"seed", cfg.train.seed},
                    {"trace_every", cfg.train.trace_every}}}};
}

RateConfig rate_config_from_json(const nlohmann::json& j) {
  RateConfig cfg;
  cfg.estimator = parse_rate_estimator(j.value("estimator", std::string("structured-hist")));
  cfg.d = j.value("d", 3);
  if (j.contains("psi")) cfg.psi = potential_from_json(j.at("psi"));
  cfg.chain_quad = j.value("chain_quad", 256);
  cfg.ns = j.at("ns").get<std::vector<std::size_t>>();
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.b_scale = j.value("b_scale", 1.0);
  cfg.C = j.value("C", 8.0);
  cfg.error_q = j.value("error_q", 64);
  cfg.threads = j.value("threads", 0);
  cfg.budget = j.value("budget", kDefaultCellBudget);
  cfg.net_F = j.value("net_F", 2.0);
  cfg.net_hidden = j.value("net_hidden", 24);
  if (j.contains("train")) {
    const auto& jt = j.at("train");
    cfg.train.steps = jt.value("steps", cfg.train.steps);
    cfg.train.batch = jt.value("batch", cfg.train.batch);
    cfg.train.norm_points = jt.value("norm_points", cfg.train.norm_points);
    cfg.train.lr_start = jt.value("lr_start", cfg.train.lr_start);
    cfg.train.lr_end = jt.value("lr_end", cfg.train.lr_end);
    cfg.train.clamp_bound = jt.value("clamp_bound", cfg.train.clamp_bound);
    cfg.train.seed = jt.value("seed", cfg.train.seed);
    cfg.train.trace_every = jt.value("trace_every", cfg.train.trace_every);
  }
  return cfg;
}

nlohmann::json rate_report_to_json(const RateReport& rep) {
  json cells = json::array();
  for (const auto& c : rep.cells) {
    cells.push_back(json{{"n", c.n},
                         {"seed", c.seed},
                         {"b", c.b},
                         {"failed", c.failed},
                         {"message", c.message},
                         {"l1", c.l1},
                         {"l2", c.l2}});
  }
  return json{{"estimator", rep.estimator},
              {"truth", rep.truth},
              {"d", rep.d},
              {"r", rep.r},
              {"predicted_slope", rep.predicted_slope},
              {"slope_l1", json{{"slope", rep.slope_l1.slope},
                                {"stderr", rep.slope_l1.stderr_slope},
                                {"intercept", rep.slope_l1.intercept}}},
              {"ns", rep.ns},
              {"b_per_n", rep.b_per_n},
              {"median_l1", rep.median_l1},
              {"median_l2", rep.median_l2},
              {"cells", cells}};
}

void write_samples_csv(std::ostream& out, const SampleMatrix& m) {
  for (int k = 1; k <= m.d; ++k) out << (k > 1 ? "," : "") << "x" << k;
  out << "\n";
  char buf[48];
  for (const auto& row : m.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      out << (k > 0 ? "," : "") << buf;
    }
    out << "\n";
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

SampleMatrix read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("samples csv: empty input");
  const auto header = split_csv_line(line);
  SampleMatrix m;
  m.d = static_cast<int>(header.size());
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] != "x" + std::to_string(k + 1))
      throw std::invalid_argument("samples csv: header must be x1,...,xd");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tokens = split_csv_line(line);
    if (tokens.size() != header.size())
      throw std::invalid_argument("samples csv: wrong column count at line " +
                                  std::to_string(lineno));
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const auto& tok : tokens) {
      std::size_t used = 0;
      double val = 0;
      try {
        val = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("samples csv: bad number at line " + std::to_string(lineno));
      }
      if (used != tok.size())
        throw std::invalid_argument("samples csv: bad number at line " + std::to_string(lineno));
      row.push_back(val);
    }
    m.rows.push_back(std::move(row));
  }
  m.validate();
  return m;
}

void write_samples_csv_file(const std::string& path, const SampleMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  write_samples_csv(out, m);
}

SampleMatrix read_samples_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return read_samples_csv(in);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << content;
}

nlohmann::json load_json_file(const std::string& path) {
  return json::parse(read_text_file(path));
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

namespace {

bool type_matches(const json& doc, const std::string& type) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "boolean") return doc.is_boolean();
  if (type == "integer") return doc.is_number_integer() || doc.is_number_unsigned();
  if (type == "number") return doc.is_number();
  if (type == "null") return doc.is_null();
  throw std::invalid_argument("schema: unknown type " + type);
}

bool validate_at(const json& doc, const json& schema, const std::string& path, std::string& err) {
  if (!schema.is_object()) throw std::invalid_argument("schema: schema node must be an object");
  if (schema.contains("type") && !type_matches(doc, schema.at("type").get<std::string>())) {
    err = path + ": expected type " + schema.at("type").get<std::string>();
    return false;
  }
  if (schema.contains("enum")) {
    bool hit = false;
    for (const auto& v : schema.at("enum"))
      if (doc == v) hit = true;
    if (!hit) {
      err = path + ": value not in enum";
      return false;
    }
  }
  if (doc.is_number()) {
    if (schema.contains("minimum") && doc.get<double>() < schema.at("minimum").get<double>()) {
      err = path + ": below minimum";
      return false;
    }
    if (schema.contains("maximum") && doc.get<double>() > schema.at("maximum").get<double>()) {
      err = path + ": above maximum";
      return false;
    }
  }
  if (doc.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema.at("required")) {
        if (!doc.contains(key.get<std::string>())) {
          err = path + ": missing required key " + key.get<std::string>();
          return false;
        }
      }
    }
    const json props = schema.value("properties", json::object());
    if (schema.value("additionalProperties", true) == false) {
      for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!props.contains(it.key())) {
          err = path + ": unexpected key " + it.key();
          return false;
        }
      }
    }
    for (auto it = props.begin(); it != props.end(); ++it) {
      if (doc.contains(it.key()) &&
          !validate_at(doc.at(it.key()), it.value(), path + "." + it.key(), err))
        return false;
    }
  }
  if (doc.is_array()) {
    if (schema.contains("minItems") && doc.size() < schema.at("minItems").get<std::size_t>()) {
      err = path + ": too few items";
      return false;
    }
    if (schema.contains("maxItems") && doc.size() > schema.at("maxItems").get<std::size_t>()) {
      err = path + ": too many items";
      return false;
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        if (!validate_at(doc[i], schema.at("items"),
                         path + "[" + std::to_string(i) + "]", err))
          return false;
      }
    }
  }
  return true;
}

}  // namespace

bool validate_json(const nlohmann::json& doc, const nlohmann::json& schema, std::string& err) {
  err.clear();
  return validate_at(doc, schema, "$", err);
}

}  // namespace mrfdens
