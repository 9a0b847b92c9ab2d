// Domain types shared by every degkit module.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace degkit {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, CSV, numeric matrices).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A record parsed cleanly but breaks a domain invariant. `field()` names the
/// offending field so callers can report it.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class MissingFileError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Data types (measurement conditions)

enum class DataType { kReactivity, kDegMgPH10, kDegPH10, kDegMg50C, kDeg50C };

inline constexpr std::array<DataType, 5> kAllDataTypes = {
    DataType::kReactivity, DataType::kDegMgPH10, DataType::kDegPH10,
    DataType::kDegMg50C, DataType::kDeg50C};

/// The three columns used for scoring.
inline constexpr std::array<DataType, 3> kScoredDataTypes = {
    DataType::kReactivity, DataType::kDegMgPH10, DataType::kDegMg50C};

std::string_view to_string(DataType t);
/// Throws ValidationError("data_type") for unknown names.
DataType parse_data_type(std::string_view name);
/// Parses a comma-separated list such as "reactivity,deg_Mg_pH10".
std::vector<DataType> parse_data_type_list(std::string_view csv);
inline int index_of(DataType t) { return static_cast<int>(t); }

// ---------------------------------------------------------------------------
// Constructs

/// Base-pair probability matrix of one RNA, ingested from an external folding
/// engine.
struct BppMatrix {
  Eigen::MatrixXd p;
  Eigen::Index size() const { return p.rows(); }
};

/// A measured profile over the scored window and its per-position errors.
struct Profile {
  Eigen::VectorXd values;
  Eigen::VectorXd errors;  // empty when the source carried no error array
};

/// One RNA design with its structure annotation and measured profiles.
///
/// Profiles cover the scored window [scored_offset, scored_offset + seq_scored).
/// Released data always has scored_offset == 0; reversal augmentation moves
/// the window to the 3' end.
struct Construct {
  std::string id;
  std::string sequence;
  std::string structure;
  std::string loop_string;
  int seq_length = 0;
  int seq_scored = 0;
  int scored_offset = 0;
  int round = 0;  // 1 or 2 for released data, 0 when unknown
  std::map<DataType, Profile> profiles;
  double signal_to_noise = 0.0;
  bool sn_pass = false;
  bool synthetic = false;  // profiles are pseudo-labels, not measurements
  std::optional<BppMatrix> bpp;

  bool has_profile(DataType t) const { return profiles.count(t) != 0; }
  const Profile& profile(DataType t) const;
  bool is_scored(int position) const {
    return position >= scored_offset && position < scored_offset + seq_scored;
  }
};

using Dataset = std::vector<Construct>;

/// Checks every Construct invariant; throws ValidationError naming the field.
void validate(const Construct& c);

/// Per-construct, per-data-type predicted values from one model. Arrays are
/// indexed by absolute sequence position.
struct PredictionSet {
  std::string model_name;
  std::map<std::string, std::map<DataType, Eigen::VectorXd>> entries;

  bool empty() const { return entries.empty(); }
  /// Throws Error naming (id, column) when absent.
  const Eigen::VectorXd& at(const std::string& id, DataType t) const;
};

}  // namespace degkit
