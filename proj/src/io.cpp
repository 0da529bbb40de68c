#include "stabsel/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <vector>

namespace stabsel::io {

namespace {

using nlohmann::json;

std::string loc(const std::filesystem::path& path) { return path.string(); }

void require_keys(const json& j, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, const std::string& what) {
  if (!j.is_object()) throw DataError(what + " must be a JSON object");
  for (const char* key : required)
    if (!j.contains(key)) throw DataError(what + " is missing key '" + key + "'");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    const auto known = [&](std::initializer_list<const char*> list) {
      for (const char* k : list)
        if (key == k) return true;
      return false;
    };
    if (!known(required) && !known(optional)) throw DataError(what + " has unknown key '" + key + "'");
  }
}

double parse_field(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  const auto begin = field.find_first_not_of(" \t\r");
  const auto end = field.find_last_not_of(" \t\r");
  if (begin == std::string::npos)
    throw DataError(loc(path) + ":" + std::to_string(line) + ": empty field");
  const std::string token = field.substr(begin, end - begin + 1);
  const char* c = token.c_str();
  char* stop = nullptr;
  errno = 0;
  const double v = std::strtod(c, &stop);
  if (stop != c + token.size() || errno == ERANGE || !std::isfinite(v))
    throw DataError(loc(path) + ":" + std::to_string(line) + ": bad numeric field '" + token + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<int>> groups_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw DataError(what + " must be an array");
  std::vector<std::vector<int>> out;
  for (const json& g : arr) {
    if (!g.is_array()) throw DataError(what + " entries must be arrays");
    std::vector<int> members;
    for (const json& v : g) {
      if (!v.is_number_integer()) throw DataError(what + " members must be integers");
      members.push_back(v.get<int>() - 1);  // 1-based on disk
    }
    out.push_back(std::move(members));
  }
  return out;
}

std::vector<double> weights_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw DataError(what + " must be an array");
  std::vector<double> out;
  for (const json& v : arr) {
    if (!v.is_number()) throw DataError(what + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json groups_to_json(const std::vector<std::vector<int>>& groups) {
  json arr = json::array();
  for (const auto& g : groups) {
    json members = json::array();
    for (int v : g) members.push_back(v + 1);
    arr.push_back(std::move(members));
  }
  return arr;
}

}  // namespace

CsvShape read_shape_sidecar(const std::filesystem::path& path) {
  const json j = load_json_file(path);
  require_keys(j, {"n_samples", "n_inputs"}, {}, loc(path));
  if (!j["n_samples"].is_number_integer() || !j["n_inputs"].is_number_integer())
    throw DataError(loc(path) + ": n_samples and n_inputs must be integers");
  CsvShape shape;
  shape.rows = j["n_samples"].get<Eigen::Index>();
  shape.cols = j["n_inputs"].get<int>();
  if (shape.rows < 1 || shape.cols < 1) throw DataError(loc(path) + ": dimensions must be positive");
  return shape;
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path, Eigen::Index expected_rows,
                                Eigen::Index expected_cols) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + loc(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string field =
          comma == std::string::npos ? line.substr(start) : line.substr(start, comma - start);
      row.push_back(parse_field(field, path, line_no));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError(loc(path) + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " fields, got " +
                      std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(loc(path) + " is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  if (expected_rows >= 0 && m.rows() != expected_rows)
    throw DataError(loc(path) + " has " + std::to_string(m.rows()) + " rows, expected " +
                    std::to_string(expected_rows));
  if (expected_cols >= 0 && m.cols() != expected_cols)
    throw DataError(loc(path) + " has " + std::to_string(m.cols()) + " columns, expected " +
                    std::to_string(expected_cols));
  return m;
}

void save_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 12);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  atomic_write_text(path, out);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + loc(tmp));
    out << content;
    if (!out.good()) throw DataError("write failed for " + loc(tmp));
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + loc(path));
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("failed to parse " + loc(path) + ": " + e.what());
  }
}

void save_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  atomic_write_text(path, j.dump(2) + "\n");
}

void save_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle) {
  bundle.validate();
  std::filesystem::create_directories(dir);
  save_matrix_csv(dir / "X.csv", bundle.design);
  save_matrix_csv(dir / "Y.csv", bundle.response);

  json meta;
  meta["shape"] = {{"n_samples", bundle.shape.n_samples},
                   {"n_inputs", bundle.shape.n_inputs},
                   {"n_outputs", bundle.shape.n_outputs}};
  meta["input_groups"] = groups_to_json(bundle.groups.input_groups);
  meta["input_weights"] = bundle.groups.input_weights;
  meta["output_groups"] = groups_to_json(bundle.groups.output_groups);
  meta["output_weights"] = bundle.groups.output_weights;
  if (bundle.truth) {
    json pairs = json::array();
    for (const Pair& p : bundle.truth->positives().pairs()) pairs.push_back({p.input, p.output});
    meta["truth"] = std::move(pairs);
  }
  meta["provenance"] = {{"config_name", bundle.meta.config_name},
                        {"matrix_type", bundle.meta.matrix_type},
                        {"seed", bundle.meta.seed},
                        {"snr", bundle.meta.snr},
                        {"extra", bundle.meta.extra}};
  save_json_file(dir / "meta.json", meta);
}

DatasetBundle load_bundle(const std::filesystem::path& dir) {
  const std::filesystem::path meta_path = dir / "meta.json";
  const json meta = load_json_file(meta_path);
  require_keys(meta,
               {"shape", "input_groups", "input_weights", "output_groups", "output_weights",
                "provenance"},
               {"truth"}, loc(meta_path));
  const json& shape_json = meta["shape"];
  require_keys(shape_json, {"n_samples", "n_inputs", "n_outputs"}, {}, loc(meta_path) + " shape");

  DatasetBundle bundle;
  bundle.shape.n_samples = shape_json["n_samples"].get<Eigen::Index>();
  bundle.shape.n_inputs = shape_json["n_inputs"].get<int>();
  bundle.shape.n_outputs = shape_json["n_outputs"].get<int>();
  bundle.shape.validate();

  bundle.groups.input_groups = groups_from_json(meta["input_groups"], loc(meta_path) + " input_groups");
  bundle.groups.input_weights =
      weights_from_json(meta["input_weights"], loc(meta_path) + " input_weights");
  bundle.groups.output_groups =
      groups_from_json(meta["output_groups"], loc(meta_path) + " output_groups");
  bundle.groups.output_weights =
      weights_from_json(meta["output_weights"], loc(meta_path) + " output_weights");

  if (meta.contains("truth")) {
    std::vector<Pair> pairs;
    for (const json& p : meta["truth"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
        throw DataError(loc(meta_path) + ": truth entries must be [input, output] pairs");
      pairs.push_back(Pair{p[0].get<int>(), p[1].get<int>()});
    }
    bundle.truth = GroundTruth(Selection::from_pairs(bundle.shape, pairs));
  }

  const json& prov = meta["provenance"];
  require_keys(prov, {"config_name", "matrix_type", "seed", "snr"}, {"extra"},
               loc(meta_path) + " provenance");
  bundle.meta.config_name = prov["config_name"].get<std::string>();
  bundle.meta.matrix_type = prov["matrix_type"].get<std::string>();
  bundle.meta.seed = prov["seed"].get<std::uint64_t>();
  bundle.meta.snr = prov["snr"].get<double>();
  if (prov.contains("extra")) bundle.meta.extra = prov["extra"];

  bundle.design = load_matrix_csv(dir / "X.csv", bundle.shape.n_samples, bundle.shape.n_inputs);
  bundle.response = load_matrix_csv(dir / "Y.csv", bundle.shape.n_samples, bundle.shape.n_outputs);
  bundle.validate();
  return bundle;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace stabsel::io
