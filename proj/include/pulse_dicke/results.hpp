#pragma once

// CSV / JSON serialisation of sweep records and time-series tables.
//
// Reals are written as the shortest decimal that parses back to the same
// double, so files are byte-stable and re-parse exactly. Non-finite values are
// written as "nan" in CSV and null in JSON.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pulse_dicke/experiments.hpp"

namespace pulse_dicke {

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw Error(ErrorCode::UsageError, "unknown output format '" + s + "' (expected csv or json)");
}

inline std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

inline std::string format_real(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_real(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error(ErrorCode::IoFailure, "malformed number '" + s + "'");
    return x;
}

inline std::string render_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += table.columns[c];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            if (const auto* i = std::get_if<long long>(&row[c])) out += std::to_string(*i);
            else if (const auto* d = std::get_if<double>(&row[c])) out += format_real(*d);
            else out += std::get<std::string>(row[c]);
        }
        out += '\n';
    }
    return out;
}

inline std::string render_json(const Table& table) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
            const std::string& key = table.columns[c];
            if (const auto* i = std::get_if<long long>(&row[c])) obj[key] = *i;
            else if (const auto* d = std::get_if<double>(&row[c])) obj[key] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nullptr;
            else obj[key] = std::get<std::string>(row[c]);
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

// Writes `content` to `path` through a sibling temporary file and a rename, so
// that a failure never leaves a partial file at `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
        f.write(content.data(), std::streamsize(content.size()));
        f.flush();
        if (!f) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot move result into '" + path.string() + "': " + ec.message());
    }
}

inline std::string render(const Table& table, OutputFormat format) {
    return format == OutputFormat::Csv ? render_csv(table) : render_json(table);
}

inline void write_table(const Table& table, const std::filesystem::path& path, OutputFormat format) {
    if (table.rows.empty()) throw Error(ErrorCode::Rejected, "refusing to write an empty result set to '" + path.string() + "'");
    write_file_atomic(path, render(table, format));
}

inline std::string to_string(RecordStatus s) { return s == RecordStatus::Pass ? "PASS" : "FAILED"; }

// Column order follows SweepRecord. The open-system columns appear only when
// at least one record carries them; the JSON form also carries status/error.
inline Table records_table(const std::vector<SweepRecord>& records, OutputFormat format) {
    bool open = false;
    for (const auto& r : records) open = open || r.kappa.has_value();
    Table t;
    t.columns = {"n_attackers", "upsilon", "n_max_used", "fidelity_final", "entropy_final", "entropy_max"};
    if (open) t.columns.insert(t.columns.end(), {"kappa", "negativity_final", "log_negativity_final", "purity_final"});
    t.columns.insert(t.columns.end(), {"truncation_tail", "norm_drift"});
    if (format == OutputFormat::Json) t.columns.insert(t.columns.end(), {"status", "error"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : records) {
        std::vector<Cell> row{(long long)r.n_attackers, r.upsilon,       (long long)r.n_max_used,
                              r.fidelity_final,         r.entropy_final, r.entropy_max};
        if (open) {
            row.insert(row.end(), {r.kappa.value_or(nan), r.negativity_final.value_or(nan), r.log_negativity_final.value_or(nan),
                                   r.purity_final.value_or(nan)});
        }
        row.insert(row.end(), {r.truncation_tail, r.norm_drift});
        if (format == OutputFormat::Json) row.insert(row.end(), {to_string(r.status), r.error});
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table entropy_table(const std::vector<EntropyRow>& rows) {
    Table t;
    t.columns = {"n_attackers", "upsilon", "t", "lambda", "entropy"};
    for (const auto& r : rows) t.rows.push_back({(long long)r.n_attackers, r.upsilon, r.t, r.lambda, r.entropy});
    return t;
}

inline Table entropy_peaks_table(const std::vector<EntropyPeak>& peaks) {
    Table t;
    t.columns = {"n_attackers", "upsilon", "n_max_used", "entropy_max"};
    for (const auto& p : peaks) t.rows.push_back({(long long)p.n_attackers, p.upsilon, (long long)p.n_max_used, p.entropy_max});
    return t;
}

inline Table negativity_table(const std::vector<NegativityRow>& rows) {
    Table t;
    t.columns = {"n_attackers", "upsilon", "kappa", "t", "lambda", "negativity", "log_negativity", "purity", "trace"};
    for (const auto& r : rows)
        t.rows.push_back({(long long)r.n_attackers, r.upsilon, r.kappa, r.t, r.lambda, r.negativity, r.log_negativity, r.purity, r.trace});
    return t;
}

inline void write_results(const std::vector<SweepRecord>& records, const std::filesystem::path& path, OutputFormat format) {
    if (records.empty()) throw Error(ErrorCode::Rejected, "refusing to write an empty record list to '" + path.string() + "'");
    write_table(records_table(records, format), path, format);
}

inline void write_results(const EntropyMap& map, const std::filesystem::path& path, OutputFormat format) {
    write_table(entropy_table(map.rows), path, format);
}

inline void write_results(const NegativityTrace& trace, const std::filesystem::path& path, OutputFormat format) {
    write_table(negativity_table(trace.rows), path, format);
}

// ---- reading back -------------------------------------------------------

struct TextTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return int(i);
        return -1;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline TextTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
    TextTable t;
    std::string line;
    if (!std::getline(f, line)) throw Error(ErrorCode::IoFailure, "'" + path.string() + "' is empty");
    t.columns = split_csv_line(line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.columns.size()) throw Error(ErrorCode::IoFailure, "ragged row in '" + path.string() + "'");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path) {
    const TextTable t = read_csv(path);
    auto col = [&](const char* name) {
        const int c = t.column(name);
        if (c < 0) throw Error(ErrorCode::IoFailure, std::string("missing column ") + name);
        return c;
    };
    const bool open = t.column("kappa") >= 0;
    std::vector<SweepRecord> out;
    for (const auto& row : t.rows) {
        SweepRecord r;
        r.n_attackers = std::stoi(row[col("n_attackers")]);
        r.upsilon = parse_real(row[col("upsilon")]);
        r.n_max_used = std::stoi(row[col("n_max_used")]);
        r.fidelity_final = parse_real(row[col("fidelity_final")]);
        r.entropy_final = parse_real(row[col("entropy_final")]);
        r.entropy_max = parse_real(row[col("entropy_max")]);
        if (open) {
            auto opt = [&](const char* name) -> std::optional<double> {
                const double v = parse_real(row[col(name)]);
                return std::isnan(v) ? std::nullopt : std::optional<double>(v);
            };
            r.kappa = opt("kappa");
            r.negativity_final = opt("negativity_final");
            r.log_negativity_final = opt("log_negativity_final");
            r.purity_final = opt("purity_final");
        }
        r.truncation_tail = parse_real(row[col("truncation_tail")]);
        r.norm_drift = parse_real(row[col("norm_drift")]);
        r.status = std::isnan(r.fidelity_final) && !r.negativity_final ? RecordStatus::Failed : RecordStatus::Pass;
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<SweepRecord> read_records_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoFailure, "'" + path.string() + "': " + e.what());
    }
    auto real = [](const nlohmann::json& v) {
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    auto opt = [&](const nlohmann::json& obj, const char* key) -> std::optional<double> {
        if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
        return obj[key].get<double>();
    };
    std::vector<SweepRecord> out;
    for (const auto& o : arr) {
        SweepRecord r;
        r.n_attackers = o.at("n_attackers").get<int>();
        r.upsilon = real(o.at("upsilon"));
        r.n_max_used = o.at("n_max_used").get<int>();
        r.fidelity_final = real(o.at("fidelity_final"));
        r.entropy_final = real(o.at("entropy_final"));
        r.entropy_max = real(o.at("entropy_max"));
        r.kappa = opt(o, "kappa");
        r.negativity_final = opt(o, "negativity_final");
        r.log_negativity_final = opt(o, "log_negativity_final");
        r.purity_final = opt(o, "purity_final");
        r.truncation_tail = real(o.at("truncation_tail"));
        r.norm_drift = real(o.at("norm_drift"));
        r.status = o.value("status", std::string("PASS")) == "FAILED" ? RecordStatus::Failed : RecordStatus::Pass;
        r.error = o.value("error", std::string());
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace pulse_dicke
