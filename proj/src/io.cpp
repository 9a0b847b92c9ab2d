#include "degkit/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "degkit/structfeat.hpp"

namespace degkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Eigen::VectorXd read_array(const json& obj, const std::string& field) {
  const json& arr = obj.at(field);
  if (!arr.is_array()) throw ValidationError(field, "expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ValidationError(field, "non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

std::string read_string(const json& obj, const std::string& field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ValidationError(field, "missing field");
  if (!it->is_string()) throw ValidationError(field, "expected a string");
  return it->get<std::string>();
}

int read_int(const json& obj, const std::string& field, int fallback) {
  auto it = obj.find(field);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) throw ValidationError(field, "expected a number");
  double v = it->get<double>();
  if (v != std::floor(v)) throw ValidationError(field, "expected an integer");
  return static_cast<int>(v);
}

json to_json_array(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

double parse_double(const char* text, std::size_t line, const std::string& what) {
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(text, &end);
  if (end == text || errno == ERANGE) throw ParseError("bad number in " + what, line);
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  if (*end != '\0') throw ParseError("trailing characters in " + what, line);
  return v;
}

}  // namespace

Construct parse_construct(const std::string& json_text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!obj.is_object()) throw ParseError("record is not a JSON object", line);

  Construct c;
  c.id = read_string(obj, "id");
  c.sequence = read_string(obj, "sequence");
  c.structure = read_string(obj, "structure");
  c.seq_length = read_int(obj, "seq_length", static_cast<int>(c.sequence.size()));
  c.seq_scored = read_int(obj, "seq_scored", c.seq_length);
  c.scored_offset = read_int(obj, "scored_offset", 0);
  c.round = read_int(obj, "round", c.seq_length == 107 ? 1 : c.seq_length == 130 ? 2 : 0);
  if (obj.contains("predicted_loop_type")) {
    c.loop_string = read_string(obj, "predicted_loop_type");
  } else if (c.structure.size() == c.sequence.size()) {
    c.loop_string = annotate_loops(pair_table(c.structure));
  }
  for (DataType t : kAllDataTypes) {
    const std::string name(to_string(t));
    if (!obj.contains(name)) continue;
    Profile prof;
    prof.values = read_array(obj, name);
    if (obj.contains(name + "_error")) prof.errors = read_array(obj, name + "_error");
    c.profiles.emplace(t, std::move(prof));
  }
  if (auto it = obj.find("signal_to_noise"); it != obj.end()) {
    if (!it->is_number()) throw ValidationError("signal_to_noise", "expected a number");
    c.signal_to_noise = it->get<double>();
  }
  if (auto it = obj.find("SN_filter"); it != obj.end()) {
    if (!it->is_number()) throw ValidationError("SN_filter", "expected 0 or 1");
    c.sn_pass = it->get<double>() != 0.0;
  }
  if (auto it = obj.find("synthetic"); it != obj.end() && it->is_boolean()) c.synthetic = it->get<bool>();
  validate(c);
  return c;
}

Dataset parse_dataset(const fs::path& path, const std::optional<fs::path>& bpp_dir) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open dataset " + path.string());
  Dataset out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_construct(text, line));
    } catch (const ValidationError& e) {
      throw ValidationError(e.field(), std::string(e.what()) + " (line " + std::to_string(line) + ")");
    }
  }
  if (bpp_dir) {
    for (Construct& c : out) {
      fs::path file = *bpp_dir / (c.id + ".bpp");
      if (!fs::exists(file)) throw MissingFileError("missing BPP file " + file.string());
      c.bpp = load_bpp(file, c.seq_length);
    }
  }
  return out;
}

std::string format_construct(const Construct& c) {
  json obj;
  obj["id"] = c.id;
  obj["sequence"] = c.sequence;
  obj["structure"] = c.structure;
  obj["predicted_loop_type"] = c.loop_string;
  obj["seq_length"] = c.seq_length;
  obj["seq_scored"] = c.seq_scored;
  if (c.scored_offset != 0) obj["scored_offset"] = c.scored_offset;
  if (c.round != 0) obj["round"] = c.round;
  obj["signal_to_noise"] = c.signal_to_noise;
  obj["SN_filter"] = c.sn_pass ? 1 : 0;
  if (c.synthetic) obj["synthetic"] = true;
  for (const auto& [t, prof] : c.profiles) {
    const std::string name(to_string(t));
    obj[name] = to_json_array(prof.values);
    if (prof.errors.size() != 0) obj[name + "_error"] = to_json_array(prof.errors);
  }
  return obj.dump();
}

void write_dataset(const Dataset& data, const fs::path& path) {
  std::string content;
  for (const Construct& c : data) {
    content += format_construct(c);
    content += '\n';
  }
  write_file_atomic(path, content);
}

void check_bpp(BppMatrix& bpp) {
  Eigen::MatrixXd& p = bpp.p;
  if (p.rows() != p.cols()) throw ValidationError("bpp", "matrix is not square");
  if (p.size() == 0) return;
  if (!p.allFinite() || p.minCoeff() < 0.0 || p.maxCoeff() > 1.0)
    throw ValidationError("bpp", "entries outside [0, 1]");
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > kBppSymmetryTol)
    throw ValidationError("bpp", "matrix is not symmetric");
  if (p.diagonal().cwiseAbs().maxCoeff() > kBppSymmetryTol)
    throw ValidationError("bpp", "nonzero diagonal");
  p = (0.5 * (p + p.transpose())).eval();
  p.diagonal().setZero();
  if (p.rowwise().sum().maxCoeff() > 1.0 + kBppRowSumTol)
    throw ValidationError("bpp", "row sum exceeds 1");
}

BppMatrix load_bpp(const fs::path& path, Eigen::Index n) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open BPP file " + path.string());
  BppMatrix bpp{Eigen::MatrixXd::Zero(n, n)};
  std::string text;
  std::size_t line = 0;
  Eigen::Index row = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row >= n) throw ValidationError("bpp", "more than " + std::to_string(n) + " rows in " + path.string());
    std::istringstream fields(text);
    std::string tok;
    Eigen::Index col = 0;
    while (fields >> tok) {
      if (col >= n)
        throw ValidationError("bpp", "row " + std::to_string(row) + " has more than " + std::to_string(n) + " columns");
      bpp.p(row, col++) = parse_double(tok.c_str(), line, path.string());
    }
    if (col != n)
      throw ValidationError("bpp", "row " + std::to_string(row) + " has " + std::to_string(col) + " columns, expected " +
                                       std::to_string(n));
    ++row;
  }
  if (row != n)
    throw ValidationError("bpp", path.string() + " has " + std::to_string(row) + " rows, expected " + std::to_string(n));
  check_bpp(bpp);
  return bpp;
}

void write_bpp(const BppMatrix& bpp, const fs::path& path) {
  std::string content;
  for (Eigen::Index i = 0; i < bpp.size(); ++i) {
    for (Eigen::Index j = 0; j < bpp.size(); ++j) {
      if (j) content += ' ';
      content += format_g6(bpp.p(i, j));
    }
    content += '\n';
  }
  write_file_atomic(path, content);
}

std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_predictions(const PredictionSet& preds, const fs::path& path, const std::vector<DataType>& columns) {
  std::string content = "id_seqpos";
  for (DataType t : columns) {
    content += ',';
    content += to_string(t);
  }
  content += '\n';
  for (const auto& [id, by_type] : preds.entries) {
    Eigen::Index len = -1;
    for (DataType t : columns) {
      auto it = by_type.find(t);
      if (it == by_type.end())
        throw Error("construct " + id + " lacks " + std::string(to_string(t)) + " predictions");
      if (len >= 0 && it->second.size() != len) throw Error("construct " + id + " has ragged prediction columns");
      len = it->second.size();
    }
    if (len < 0) len = 0;
    for (Eigen::Index k = 0; k < len; ++k) {
      content += id;
      content += '_';
      content += std::to_string(k);
      for (DataType t : columns) {
        content += ',';
        content += format_g6(by_type.at(t)[k]);
      }
      content += '\n';
    }
  }
  write_file_atomic(path, content);
}

PredictionSet read_predictions(const fs::path& path, const std::string& model_name) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open predictions " + path.string());
  PredictionSet preds;
  preds.model_name = model_name.empty() ? path.stem().string() : model_name;

  std::string text;
  if (!std::getline(in, text)) throw ParseError("empty prediction file " + path.string(), 1);
  if (!text.empty() && text.back() == '\r') text.pop_back();
  std::vector<DataType> columns;
  {
    std::istringstream hdr(text);
    std::string cell;
    std::getline(hdr, cell, ',');
    if (cell != "id_seqpos") throw ParseError("prediction header must start with id_seqpos", 1);
    while (std::getline(hdr, cell, ',')) columns.push_back(parse_data_type(cell));
  }

  std::map<std::string, std::vector<std::pair<long, std::vector<double>>>> rows;
  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::istringstream row(text);
    std::string key;
    std::getline(row, key, ',');
    auto us = key.rfind('_');
    if (us == std::string::npos || us + 1 == key.size()) throw ParseError("bad id_seqpos key '" + key + "'", line);
    const std::string id = key.substr(0, us);
    char* end = nullptr;
    long pos = std::strtol(key.c_str() + us + 1, &end, 10);
    if (*end != '\0' || pos < 0) throw ParseError("bad position in '" + key + "'", line);
    std::vector<double> vals;
    std::string cell;
    while (std::getline(row, cell, ',')) vals.push_back(parse_double(cell.c_str(), line, path.string()));
    if (vals.size() != columns.size()) throw ParseError("wrong number of columns", line);
    rows[id].emplace_back(pos, std::move(vals));
  }

  for (auto& [id, list] : rows) {
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto len = static_cast<Eigen::Index>(list.size());
    for (Eigen::Index k = 0; k < len; ++k)
      if (list[k].first != k) throw ParseError("construct " + id + " has missing or duplicate positions", 0);
    auto& by_type = preds.entries[id];
    for (std::size_t col = 0; col < columns.size(); ++col) {
      Eigen::VectorXd v(len);
      for (Eigen::Index k = 0; k < len; ++k) v[k] = list[k].second[col];
      by_type[columns[col]] = std::move(v);
    }
  }
  return preds;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace degkit
