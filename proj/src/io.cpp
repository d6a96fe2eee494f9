#include "nce/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nce::io {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

Error schema(std::size_t line, const std::string& what) {
    return Error(ErrorKind::Schema, "line " + std::to_string(line) + ": " + what);
}

bool parse_int(std::string_view text, long long& out) {
    text = trim(text);
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error(ErrorKind::Io, "format_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw Error(ErrorKind::Schema, "cannot parse '" + std::string(text) + "' as a number");
    return value;
}

Dataset parse_dataset_csv(std::istream& in, int num_classes) {
    std::string line;
    if (!std::getline(in, line)) throw schema(1, "empty file, expected a header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');

    std::size_t dim = 0;
    while (dim < header.size() && trim(header[dim]) == "f" + std::to_string(dim)) ++dim;
    if (dim == 0) throw schema(1, "missing feature column f0");
    if (dim == header.size() || trim(header[dim]) != "given_label") throw schema(1, "missing column given_label");
    const bool has_truth = header.size() > dim + 1;
    if (has_truth && (header.size() != dim + 2 || trim(header[dim + 1]) != "true_label"))
        throw schema(1, "unexpected column '" + std::string(trim(header[dim + 1])) + "', expected true_label or end of row");
    const std::size_t width = header.size();

    std::vector<double> values;
    std::vector<Label> given, truth;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != width)
            throw schema(line_no, "expected " + std::to_string(width) + " fields, found " + std::to_string(cells.size()));
        for (std::size_t j = 0; j < dim; ++j) {
            double v = 0.0;
            try {
                v = parse_double(cells[j]);
            } catch (const Error& e) {
                throw schema(line_no, std::string("column f") + std::to_string(j) + ": " + e.what());
            }
            if (!std::isfinite(v))
                throw Error(ErrorKind::NonFiniteFeature, "line " + std::to_string(line_no) + ": non-finite value in column f" + std::to_string(j));
            values.push_back(v);
        }
        long long label = 0;
        if (!parse_int(cells[dim], label)) throw schema(line_no, "given_label is not an integer");
        given.push_back(static_cast<Label>(label));
        if (has_truth) {
            if (!parse_int(cells[dim + 1], label)) throw schema(line_no, "true_label is not an integer");
            truth.push_back(static_cast<Label>(label));
        }
    }
    if (given.empty()) throw schema(line_no, "no data rows");

    if (num_classes <= 0) {
        Label top = *std::max_element(given.begin(), given.end());
        if (has_truth) top = std::max(top, *std::max_element(truth.begin(), truth.end()));
        num_classes = std::max(2, top + 1);
    }
    Matrix x(static_cast<Eigen::Index>(given.size()), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = values[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(j)];
    std::optional<std::vector<Label>> maybe_truth;
    if (has_truth) maybe_truth = std::move(truth);
    return validate_dataset(std::move(x), std::move(given), num_classes, std::move(maybe_truth));
}

Dataset read_dataset(const std::filesystem::path& path, int num_classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return parse_dataset_csv(in, num_classes);
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
    EvaluationScope lift;
    const bool truth = dataset.has_true_labels();
    for (Eigen::Index j = 0; j < dataset.dim(); ++j) out << 'f' << j << ',';
    out << "given_label";
    if (truth) out << ",true_label";
    out << '\n';
    const auto& x = dataset.features();
    const auto& given = dataset.given_labels();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) out << format_double(x(i, j)) << ',';
        out << given[static_cast<std::size_t>(i)];
        if (truth) out << ',' << dataset.true_labels()[static_cast<std::size_t>(i)];
        out << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    write_dataset_csv(out, dataset);
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

namespace {

using Setter = std::function<void(Config&, std::string_view)>;

int to_int(std::string_view v) {
    long long out = 0;
    if (!parse_int(v, out)) throw Error(ErrorKind::InvalidConfig, "expected an integer, got '" + std::string(v) + "'");
    return static_cast<int>(out);
}

double to_real(std::string_view v) {
    try {
        return parse_double(v);
    } catch (const Error&) {
        throw Error(ErrorKind::InvalidConfig, "expected a number, got '" + std::string(v) + "'");
    }
}

bool to_bool(std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error(ErrorKind::InvalidConfig, "expected true/false, got '" + std::string(v) + "'");
}

const std::map<std::string, Setter, std::less<>>& config_keys() {
    static const std::map<std::string, Setter, std::less<>> keys = {
        {"K", [](Config& c, std::string_view v) { c.K = to_int(v); }},
        {"tau", [](Config& c, std::string_view v) { c.tau = to_real(v); }},
        {"tau_prime", [](Config& c, std::string_view v) { c.tau_prime = to_real(v); }},
        {"gamma", [](Config& c, std::string_view v) { c.gamma = to_real(v); }},
        {"alpha", [](Config& c, std::string_view v) { c.alpha = to_real(v); }},
        {"eta", [](Config& c, std::string_view v) { c.eta = to_real(v); }},
        {"T_wu", [](Config& c, std::string_view v) { c.T_wu = to_int(v); }},
        {"T_tr", [](Config& c, std::string_view v) { c.T_tr = to_int(v); }},
        {"B", [](Config& c, std::string_view v) { c.B = to_int(v); }},
        {"B_prime", [](Config& c, std::string_view v) { c.B_prime = to_int(v); }},
        {"seed",
         [](Config& c, std::string_view v) {
             long long s = 0;
             if (!parse_int(v, s) || s < 0) throw Error(ErrorKind::InvalidConfig, "seed must be a non-negative integer");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"perturbation_sigma", [](Config& c, std::string_view v) { c.perturbation.gaussian_sigma = to_real(v); }},
        {"perturbation_dropout", [](Config& c, std::string_view v) { c.perturbation.dropout_rate = to_real(v); }},
        {"apply_lab_to_clean", [](Config& c, std::string_view v) { c.apply_lab_to_clean = to_bool(v); }},
        {"hidden_dim", [](Config& c, std::string_view v) { c.hidden_dim = to_int(v); }},
        {"momentum", [](Config& c, std::string_view v) { c.momentum = to_real(v); }},
        {"weight_decay", [](Config& c, std::string_view v) { c.weight_decay = to_real(v); }},
        {"feature_source",
         [](Config& c, std::string_view v) {
             v = trim(v);
             if (v == "raw") c.feature_source = FeatureSource::Raw;
             else if (v == "embedding") c.feature_source = FeatureSource::Embedding;
             else throw Error(ErrorKind::InvalidConfig, "feature_source must be raw or embedding");
         }},
        {"use_mixup", [](Config& c, std::string_view v) { c.use_mixup = to_bool(v); }},
        {"use_lab_loss", [](Config& c, std::string_view v) { c.use_lab_loss = to_bool(v); }},
        {"correction_mode",
         [](Config& c, std::string_view v) {
             v = trim(v);
             if (v == "neighborhood") c.correction_mode = CorrectionMode::Neighborhood;
             else if (v == "confidence") c.correction_mode = CorrectionMode::ConfidenceThreshold;
             else throw Error(ErrorKind::InvalidConfig, "correction_mode must be neighborhood or confidence");
         }},
        {"confidence_threshold", [](Config& c, std::string_view v) { c.confidence_threshold = to_real(v); }},
    };
    return keys;
}

}  // namespace

Config parse_config(std::string_view text) {
    Config config;
    std::size_t line_no = 0;
    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto& keys = config_keys();
        const auto it = keys.find(key);
        if (it == keys.end())
            throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
        try {
            it->second(config, value);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + " (" + std::string(key) + "): " + e.what());
        }
    }
    config.check();
    return config;
}

Config read_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string format_config(const Config& c) {
    std::ostringstream out;
    out << "K = " << c.K << '\n'
        << "tau = " << format_double(c.tau) << '\n'
        << "tau_prime = " << format_double(c.tau_prime) << '\n'
        << "gamma = " << format_double(c.gamma) << '\n'
        << "alpha = " << format_double(c.alpha) << '\n'
        << "eta = " << format_double(c.eta) << '\n'
        << "T_wu = " << c.T_wu << '\n'
        << "T_tr = " << c.T_tr << '\n'
        << "B = " << c.B << '\n'
        << "B_prime = " << c.B_prime << '\n'
        << "seed = " << c.seed << '\n'
        << "perturbation_sigma = " << format_double(c.perturbation.gaussian_sigma) << '\n'
        << "perturbation_dropout = " << format_double(c.perturbation.dropout_rate) << '\n'
        << "apply_lab_to_clean = " << (c.apply_lab_to_clean ? "true" : "false") << '\n'
        << "hidden_dim = " << c.hidden_dim << '\n'
        << "momentum = " << format_double(c.momentum) << '\n'
        << "weight_decay = " << format_double(c.weight_decay) << '\n'
        << "feature_source = " << (c.feature_source == FeatureSource::Raw ? "raw" : "embedding") << '\n'
        << "use_mixup = " << (c.use_mixup ? "true" : "false") << '\n'
        << "use_lab_loss = " << (c.use_lab_loss ? "true" : "false") << '\n'
        << "correction_mode = " << (c.correction_mode == CorrectionMode::Neighborhood ? "neighborhood" : "confidence") << '\n'
        << "confidence_threshold = " << format_double(c.confidence_threshold) << '\n';
    return out.str();
}

Json config_to_json(const Config& config) {
    Json out = Json::object();
    std::istringstream lines(format_config(config));
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find(" = ");
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

Json model_to_json(const Model& model) {
    Json params = Json::array();
    model.parameters().for_each([&](const char* name, const Matrix& m) {
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
        params.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}});
    });
    return {{"format", "nce-classifier"},
            {"version", 1},
            {"input_dim", model.input_dim()},
            {"hidden_dim", model.hidden_dim()},
            {"num_classes", model.num_classes()},
            {"parameters", std::move(params)}};
}

Model model_from_json(const Json& json) {
    try {
        if (json.at("format") != "nce-classifier" || json.at("version") != 1)
            throw Error(ErrorKind::Schema, "checkpoint: unsupported format");
        Parameters<double> params;
        std::map<std::string, Matrix*> slots;
        params.for_each([&](const char* name, Matrix& m) { slots[name] = &m; });
        for (const auto& entry : json.at("parameters")) {
            const auto name = entry.at("name").get<std::string>();
            const auto it = slots.find(name);
            if (it == slots.end()) throw Error(ErrorKind::Schema, "checkpoint: unknown parameter '" + name + "'");
            const auto rows = entry.at("rows").get<Eigen::Index>();
            const auto cols = entry.at("cols").get<Eigen::Index>();
            const auto values = entry.at("values").get<std::vector<double>>();
            if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != values.size())
                throw Error(ErrorKind::Schema, "checkpoint: '" + name + "' dims do not match its values");
            Matrix m(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
            *it->second = std::move(m);
        }
        Model model = Model::from_parameters(std::move(params));
        if (model.input_dim() != json.at("input_dim").get<Eigen::Index>() ||
            model.hidden_dim() != json.at("hidden_dim").get<Eigen::Index>() ||
            model.num_classes() != json.at("num_classes").get<Eigen::Index>())
            throw Error(ErrorKind::Schema, "checkpoint: header dims disagree with parameter shapes");
        return model;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("checkpoint: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const Model& model) {
    write_text(path, model_to_json(model).dump() + "\n");
}

Model load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(Json::parse(read_text(path)));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
    }
}

void write_verification_csv(std::ostream& out, const VerificationReport& report) {
    std::vector<char> noisy(report.scores.size(), 0);
    for (SampleId id : report.noisy_ids) noisy.at(static_cast<std::size_t>(id)) = 1;
    out << "sample_id,s_ver,verdict\n";
    for (std::size_t i = 0; i < report.scores.size(); ++i)
        out << i << ',' << format_double(report.scores[i]) << ',' << (noisy[i] ? "noisy" : "clean") << '\n';
}

void write_correction_csv(std::ostream& out, const CorrectionReport& report) {
    std::map<SampleId, Label> relabeled;
    for (const auto& r : report.relabeled) relabeled[r.id] = r.label;
    out << "sample_id,s_cor,verdict,new_label\n";
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const SampleId id = report.candidates[i];
        out << id << ',' << format_double(report.cor_scores[i]) << ',';
        if (const auto it = relabeled.find(id); it != relabeled.end())
            out << "relabeled," << it->second << '\n';
        else
            out << "dropped,\n";
    }
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json to_json(const BinaryScores& s) {
    return {{"precision", opt(s.precision)}, {"recall", opt(s.recall)}, {"f1", opt(s.f1)}};
}

}  // namespace

Json to_json(const IdentificationMetrics& m) {
    Json per_class = Json::array();
    for (const auto& v : m.per_class_accuracy) per_class.push_back(opt(v));
    return {{"confusion",
             {{"clean_as_clean", m.clean_as_clean},
              {"clean_as_noisy", m.clean_as_noisy},
              {"noisy_as_clean", m.noisy_as_clean},
              {"noisy_as_noisy", m.noisy_as_noisy}}},
            {"clean", to_json(m.clean)},
            {"noisy", to_json(m.noisy)},
            {"accuracy", m.accuracy},
            {"per_class_accuracy", std::move(per_class)}};
}

Json to_json(const CorrectionMetrics& m) {
    return {{"noisy", m.noisy},
            {"relabeled", m.relabeled},
            {"correct", m.correct},
            {"accuracy", opt(m.accuracy)},
            {"coverage", opt(m.coverage)}};
}

Json to_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"phase", to_string(r.phase)},
            {"clean", r.num_clean()},
            {"noisy", r.num_noisy()},
            {"relabeled", r.num_relabeled()},
            {"dropped", r.num_dropped()},
            {"losses", {{"overall", r.loss}, {"mix", r.loss_mix}, {"lab", r.loss_lab}}},
            {"identification_precision", opt(r.identification_precision)},
            {"identification_recall", opt(r.identification_recall)},
            {"correction_accuracy", opt(r.correction_accuracy)},
            {"test_accuracy", opt(r.test_accuracy)},
            {"warnings", r.warnings}};
}

Json trace_to_json(const std::vector<EpochRecord>& epochs, const Json& metadata) {
    Json list = Json::array();
    for (const auto& e : epochs) list.push_back(to_json(e));
    return {{"format", "nce-trace"}, {"version", 1}, {"metadata", metadata}, {"epochs", std::move(list)}};
}

std::vector<std::string> validate_trace(const Json& trace) {
    std::vector<std::string> problems;
    if (!trace.is_object()) return {"trace is not an object"};
    if (trace.value("format", "") != "nce-trace") problems.push_back("format must be nce-trace");
    if (!trace.contains("metadata") || !trace["metadata"].is_object()) problems.push_back("metadata must be an object");
    if (!trace.contains("epochs") || !trace["epochs"].is_array()) {
        problems.push_back("epochs must be an array");
        return problems;
    }
    int expected = 1;
    for (const auto& e : trace["epochs"]) {
        const std::string where = "epoch entry " + std::to_string(expected) + ": ";
        if (!e.is_object()) {
            problems.push_back(where + "not an object");
            ++expected;
            continue;
        }
        if (e.value("epoch", -1) != expected) problems.push_back(where + "epoch numbers must run 1, 2, ...");
        const std::string phase = e.value("phase", "");
        if (phase != "warmup" && phase != "nce" && phase != "fallback") problems.push_back(where + "unknown phase");
        for (const char* key : {"clean", "noisy", "relabeled", "dropped"})
            if (!e.contains(key) || !e[key].is_number_unsigned()) problems.push_back(where + key + " must be a count");
        if (e.contains("relabeled") && e.contains("dropped") && e.contains("noisy") && e["relabeled"].is_number() &&
            e["dropped"].is_number() && e["noisy"].is_number() &&
            e["relabeled"].get<std::size_t>() + e["dropped"].get<std::size_t>() != e["noisy"].get<std::size_t>())
            problems.push_back(where + "relabeled + dropped must equal noisy");
        if (!e.contains("losses") || !e["losses"].is_object()) {
            problems.push_back(where + "losses must be an object");
        } else {
            for (const char* key : {"overall", "mix", "lab"})
                if (!e["losses"].contains(key) || !e["losses"][key].is_number()) problems.push_back(where + "losses." + key + " must be a number");
        }
        for (const char* key : {"identification_precision", "identification_recall", "correction_accuracy", "test_accuracy"}) {
            if (!e.contains(key)) {
                problems.push_back(where + key + " missing");
                continue;
            }
            const auto& v = e[key];
            if (!v.is_null() && !(v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0))
                problems.push_back(where + key + " must be null or in [0, 1]");
        }
        if (!e.contains("warnings") || !e["warnings"].is_array()) problems.push_back(where + "warnings must be an array");
        ++expected;
    }
    return problems;
}

std::vector<std::string> validate_metrics(const Json& metrics) {
    std::vector<std::string> problems;
    if (!metrics.is_object()) return {"metrics is not an object"};
    if (metrics.value("format", "") != "nce-metrics") problems.push_back("format must be nce-metrics");
    auto unit = [&](const char* key) {
        if (!metrics.contains(key)) {
            problems.push_back(std::string(key) + " missing");
            return;
        }
        const auto& v = metrics[key];
        if (!v.is_null() && !(v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0))
            problems.push_back(std::string(key) + " must be null or in [0, 1]");
    };
    unit("test_accuracy");
    if (!metrics.contains("samples") || !metrics["samples"].is_number_integer() || metrics["samples"].get<std::int64_t>() < 0) problems.push_back("samples must be a count");
    if (metrics.contains("identification") && !metrics["identification"].is_null() && !metrics["identification"].is_object())
        problems.push_back("identification must be an object or null");
    if (metrics.contains("correction") && !metrics["correction"].is_null() && !metrics["correction"].is_object())
        problems.push_back("correction must be an object or null");
    return problems;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace nce::io
