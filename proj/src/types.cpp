#include "degkit/types.hpp"

#include "degkit/structfeat.hpp"

namespace degkit {

namespace {
constexpr std::array<std::string_view, 5> kDataTypeNames = {
    "reactivity", "deg_Mg_pH10", "deg_pH10", "deg_Mg_50C", "deg_50C"};
}

std::string_view to_string(DataType t) { return kDataTypeNames[index_of(t)]; }

DataType parse_data_type(std::string_view name) {
  for (DataType t : kAllDataTypes)
    if (to_string(t) == name) return t;
  throw ValidationError("data_type", "unknown data type '" + std::string(name) + "'");
}

std::vector<DataType> parse_data_type_list(std::string_view csv) {
  std::vector<DataType> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string_view::npos) comma = csv.size();
    std::string_view item = csv.substr(start, comma - start);
    if (!item.empty()) out.push_back(parse_data_type(item));
    start = comma + 1;
  }
  return out;
}

const Profile& Construct::profile(DataType t) const {
  auto it = profiles.find(t);
  if (it == profiles.end())
    throw ValidationError(std::string(to_string(t)), "construct " + id + " has no such profile");
  return it->second;
}

void validate(const Construct& c) {
  if (c.id.empty()) throw ValidationError("id", "empty id");
  const auto n = static_cast<std::size_t>(c.seq_length);
  if (c.seq_length <= 0) throw ValidationError("seq_length", "must be positive");
  if (c.sequence.size() != n)
    throw ValidationError("sequence", "length " + std::to_string(c.sequence.size()) +
                                          " != seq_length " + std::to_string(n));
  for (char ch : c.sequence)
    if (kBaseAlphabet.find(ch) == std::string_view::npos)
      throw ValidationError("sequence", std::string("illegal nucleotide '") + ch + "'");
  if (c.structure.size() != n)
    throw ValidationError("structure", "length " + std::to_string(c.structure.size()) +
                                           " != seq_length " + std::to_string(n));
  pair_table(c.structure);  // balanced and nested, or throws naming "structure"
  if (c.loop_string.size() != n)
    throw ValidationError("predicted_loop_type", "length " + std::to_string(c.loop_string.size()) +
                                                     " != seq_length " + std::to_string(n));
  for (char ch : c.loop_string)
    if (kLoopAlphabet.find(ch) == std::string_view::npos)
      throw ValidationError("predicted_loop_type", std::string("illegal loop label '") + ch + "'");
  if (c.seq_scored <= 0 || c.seq_scored > c.seq_length)
    throw ValidationError("seq_scored", "must satisfy 0 < seq_scored <= seq_length");
  if (c.scored_offset < 0 || c.scored_offset + c.seq_scored > c.seq_length)
    throw ValidationError("scored_offset", "scored window exceeds the sequence");
  for (const auto& [type, prof] : c.profiles) {
    const std::string name(to_string(type));
    if (prof.values.size() != c.seq_scored)
      throw ValidationError(name, "length " + std::to_string(prof.values.size()) +
                                      " != seq_scored " + std::to_string(c.seq_scored));
    if (prof.errors.size() != 0) {
      if (prof.errors.size() != c.seq_scored)
        throw ValidationError(name + "_error", "length " + std::to_string(prof.errors.size()) +
                                                   " != seq_scored " + std::to_string(c.seq_scored));
      if ((prof.errors.array() < 0.0).any())
        throw ValidationError(name + "_error", "negative error value");
    }
  }
  if (c.bpp && c.bpp->size() != c.seq_length)
    throw ValidationError("bpp", "matrix size != seq_length");
}

const Eigen::VectorXd& PredictionSet::at(const std::string& id, DataType t) const {
  auto it = entries.find(id);
  if (it == entries.end()) throw Error("no predictions for construct " + id);
  auto jt = it->second.find(t);
  if (jt == it->second.end())
    throw Error("no " + std::string(to_string(t)) + " predictions for construct " + id);
  return jt->second;
}

}  // namespace degkit
