// File formats: JSON Lines datasets, "<id>.bpp" sidecar matrices and the
// prediction CSV.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "degkit/types.hpp"

namespace degkit {

/// Tolerances applied when ingesting BPP matrices.
inline constexpr double kBppSymmetryTol = 1e-6;
inline constexpr double kBppRowSumTol = 1e-3;

/// Parses one JSONL record. `line` is only used for error messages.
Construct parse_construct(const std::string& json_text, std::size_t line = 0);

/// Reads a JSON Lines dataset in file order. Blank lines are skipped. When
/// `bpp_dir` is given every construct gets `<bpp_dir>/<id>.bpp` attached.
Dataset parse_dataset(const std::filesystem::path& path,
                      const std::optional<std::filesystem::path>& bpp_dir = {});

/// Serializes a construct back to a single JSON line (no trailing newline).
std::string format_construct(const Construct& c);
void write_dataset(const Dataset& data, const std::filesystem::path& path);

/// Reads an n x n whitespace-separated matrix. Matrices asymmetric by at most
/// kBppSymmetryTol are symmetrized; anything else invalid throws.
BppMatrix load_bpp(const std::filesystem::path& path, Eigen::Index n);
void write_bpp(const BppMatrix& bpp, const std::filesystem::path& path);
/// Validates (and symmetrizes in place) an in-memory matrix.
void check_bpp(BppMatrix& bpp);

/// Prediction CSV. Header "id_seqpos,<col>,...", rows "<id>_<pos>" with
/// values at 6 significant digits. The default columns give the exact header
/// "id_seqpos,reactivity,deg_Mg_pH10,deg_Mg_50C".
void write_predictions(const PredictionSet& preds, const std::filesystem::path& path,
                       const std::vector<DataType>& columns = {kScoredDataTypes.begin(),
                                                               kScoredDataTypes.end()});
PredictionSet read_predictions(const std::filesystem::path& path,
                               const std::string& model_name = "");

/// Formats with 6 significant digits, the precision used by every CSV writer.
std::string format_g6(double v);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace degkit
