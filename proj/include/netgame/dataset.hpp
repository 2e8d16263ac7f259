#pragma once

// Tabular datasets written by the command-line tool: fixed columns, deterministic number
// formatting (12 significant digits), CSV or JSON on disk, and a reader for both.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace netgame {

inline constexpr int kSchemaVersion = 1;

/// Empty cells mark values that do not exist for a row (never written as zero).
using Cell = std::variant<std::monostate, double, long long, std::string>;

class MalformedDataset : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// The value a reader recovers from the 12-digit text form.
inline double rounded(double v) { return std::isfinite(v) ? std::strtod(format_number(v).c_str(), nullptr) : v; }

struct Dataset {
    std::string command;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == name) return k;
        throw MalformedDataset("dataset: missing column '" + name + "'");
    }
    bool has_column(const std::string& name) const {
        for (const auto& c : columns)
            if (c == name) return true;
        return false;
    }

    /// Row builder keyed by column name; unspecified columns stay empty.
    class RowBuilder {
       public:
        RowBuilder(Dataset& d) : d_(d), row_(d.columns.size()) {}
        RowBuilder& set(const std::string& name, Cell v) {
            row_[d_.column(name)] = std::move(v);
            return *this;
        }
        RowBuilder& set(const std::string& name, double v) { return set(name, Cell{v}); }
        RowBuilder& set(const std::string& name, int v) { return set(name, Cell{static_cast<long long>(v)}); }
        RowBuilder& set(const std::string& name, bool v) { return set(name, Cell{static_cast<long long>(v ? 1 : 0)}); }
        RowBuilder& set(const std::string& name, const char* v) { return set(name, Cell{std::string(v)}); }
        void done() { d_.rows.push_back(std::move(row_)); }

       private:
        Dataset& d_;
        std::vector<Cell> row_;
    };
    RowBuilder row() { return RowBuilder(*this); }
};

/// Typed access to one row of a dataset read back from disk.
class RowView {
   public:
    RowView(const Dataset& d, std::size_t index) : d_(d), index_(index) {}
    std::size_t index() const { return index_; }
    bool present(const std::string& name) const {
        return !std::holds_alternative<std::monostate>(d_.rows[index_][d_.column(name)]);
    }
    double num(const std::string& name) const {
        const Cell& c = d_.rows[index_][d_.column(name)];
        if (const auto* v = std::get_if<double>(&c)) return *v;
        if (const auto* v = std::get_if<long long>(&c)) return static_cast<double>(*v);
        throw MalformedDataset("row " + std::to_string(index_) + ": column '" + name + "' is not numeric");
    }
    std::optional<double> opt_num(const std::string& name) const {
        if (!present(name)) return std::nullopt;
        return num(name);
    }
    int integer(const std::string& name) const {
        const double v = num(name);
        if (v != std::floor(v)) throw MalformedDataset("column '" + name + "' is not an integer");
        return static_cast<int>(v);
    }
    std::string str(const std::string& name) const {
        const Cell& c = d_.rows[index_][d_.column(name)];
        if (const auto* v = std::get_if<std::string>(&c)) return *v;
        if (std::holds_alternative<std::monostate>(c)) return {};
        throw MalformedDataset("row " + std::to_string(index_) + ": column '" + name + "' is not text");
    }

   private:
    const Dataset& d_;
    std::size_t index_;
};

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return "";
            else if constexpr (std::is_same_v<T, double>)
                return format_number(v);
            else if constexpr (std::is_same_v<T, long long>)
                return std::to_string(v);
            else
                return csv_field(v);
        },
        c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return nullptr;
            else if constexpr (std::is_same_v<T, double>)
                return std::isfinite(v) ? nlohmann::ordered_json(rounded(v)) : nlohmann::ordered_json(format_number(v));
            else
                return v;
        },
        c);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw MalformedDataset("csv: unterminated quote");
    out.push_back(cur);
    return out;
}

inline Cell parse_cell(const std::string& s) {
    if (s.empty()) return std::monostate{};
    const char* begin = s.c_str();
    char* end = nullptr;
    const long long i = std::strtoll(begin, &end, 10);
    if (*end == '\0' && s.find_first_of(".eE") == std::string::npos) return i;
    const double d = std::strtod(begin, &end);
    if (*end == '\0') return d;
    return s;
}

}  // namespace detail

/// CSV: header `dataset,<columns>`, one line per row starting with the command name, LF endings.
inline std::string to_csv(const Dataset& d) {
    std::string out = "dataset";
    for (const auto& c : d.columns) out += "," + detail::csv_field(c);
    out += "\n";
    for (const auto& row : d.rows) {
        out += detail::csv_field(d.command);
        for (const auto& c : row) out += "," + detail::cell_text(c);
        out += "\n";
    }
    return out;
}

inline std::string to_json(const Dataset& d) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = d.command;
    j["params"] = d.params;
    j["columns"] = d.columns;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : d.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::object();
        for (std::size_t k = 0; k < d.columns.size(); ++k) r[d.columns[k]] = detail::cell_json(row[k]);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

inline Dataset from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw MalformedDataset("csv: empty input");
    auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "dataset") throw MalformedDataset("csv: header must start with 'dataset'");
    Dataset d;
    d.columns.assign(header.begin() + 1, header.end());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw MalformedDataset("csv: row " + std::to_string(d.rows.size()) + " has " +
                                   std::to_string(fields.size()) + " fields, expected " +
                                   std::to_string(header.size()));
        if (d.command.empty()) d.command = fields[0];
        if (fields[0] != d.command) throw MalformedDataset("csv: mixed dataset names");
        std::vector<Cell> row;
        for (std::size_t k = 1; k < fields.size(); ++k) row.push_back(detail::parse_cell(fields[k]));
        d.rows.push_back(std::move(row));
    }
    if (d.rows.empty()) throw MalformedDataset("csv: no rows");
    return d;
}

inline Dataset from_json(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedDataset(std::string("json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema_version") || !j.contains("command") || !j.contains("rows") ||
        !j.contains("columns"))
        throw MalformedDataset("json: expected schema_version, command, columns and rows");
    if (j["schema_version"] != kSchemaVersion) throw MalformedDataset("json: unsupported schema_version");
    Dataset d;
    d.command = j["command"].get<std::string>();
    d.params = j.value("params", nlohmann::ordered_json::object());
    d.columns = j["columns"].get<std::vector<std::string>>();
    for (const auto& r : j["rows"]) {
        std::vector<Cell> row;
        for (const auto& c : d.columns) {
            const auto it = r.find(c);
            if (it == r.end() || it->is_null())
                row.emplace_back(std::monostate{});
            else if (it->is_number_integer())
                row.emplace_back(it->get<long long>());
            else if (it->is_number())
                row.emplace_back(it->get<double>());
            else if (it->is_string())
                row.emplace_back(detail::parse_cell(it->get<std::string>()));
            else
                throw MalformedDataset("json: unsupported cell type in column '" + c + "'");
        }
        d.rows.push_back(std::move(row));
    }
    if (d.rows.empty()) throw MalformedDataset("json: no rows");
    return d;
}

/// Detects the format from the first non-blank character.
inline Dataset parse_dataset(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw MalformedDataset("dataset is empty");
    return text[first] == '{' ? from_json(text) : from_csv(text);
}

inline Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedDataset("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str());
}

}  // namespace netgame
