#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "nce/evalkit.hpp"
#include "nce/finetune.hpp"
#include "nce/nclc.hpp"
#include "nce/ncnv.hpp"
#include "nce/types.hpp"

namespace nce::io {

using Json = nlohmann::json;

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// Dataset CSV: header `f0,...,f{d-1},given_label[,true_label]`, LF line endings.
Dataset parse_dataset_csv(std::istream& in, int num_classes = 0);
/// num_classes = 0 infers C as 1 + the largest label seen (at least 2).
Dataset read_dataset(const std::filesystem::path& path, int num_classes = 0);
void write_dataset_csv(std::ostream& out, const Dataset& dataset);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

// Config: `key = value` per line, `#` starts a comment, unknown keys are errors.
Config parse_config(std::string_view text);
Config read_config(const std::filesystem::path& path);
std::string format_config(const Config& config);
/// The config-file entries as a JSON object of strings.
Json config_to_json(const Config& config);

// Model checkpoint: JSON with a dims header and named row-major parameter arrays.
Json model_to_json(const Model& model);
Model model_from_json(const Json& json);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

// Report CSVs.
void write_verification_csv(std::ostream& out, const VerificationReport& report);
void write_correction_csv(std::ostream& out, const CorrectionReport& report);

Json to_json(const IdentificationMetrics& m);
Json to_json(const CorrectionMetrics& m);
Json to_json(const EpochRecord& record);

/// Per-epoch trace. `metadata` is stored verbatim under its own key and is the
/// only place a timestamp may appear.
Json trace_to_json(const std::vector<EpochRecord>& epochs, const Json& metadata = Json::object());

/// Structural check of a trace document; returns the list of problems (empty when valid).
std::vector<std::string> validate_trace(const Json& trace);
/// Same for a metrics report written by `eval`.
std::vector<std::string> validate_metrics(const Json& metrics);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace nce::io
