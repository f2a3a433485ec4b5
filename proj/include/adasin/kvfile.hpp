#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"

namespace adasin {

/// 17 significant digits: parses back to the identical double.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join_reals(const double* data, std::size_t count, char sep = ',') {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) out += sep;
        out += format_real(data[i]);
    }
    return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    if (text == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("'" + text + "' is not a number (" + what + ")");
}

inline long long parse_integer(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (trim(text.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("'" + text + "' is not an integer (" + what + ")");
}

/// Flat `dotted.key=value` text file. Lines starting with '#' are comments.
/// Keys are kept sorted so the written form is canonical.
class KeyValues {
public:
    void set(const std::string& key, const std::string& value) { m_values[key] = value; }
    void set(const std::string& key, double value) { m_values[key] = format_real(value); }
    void set(const std::string& key, long long value) { m_values[key] = std::to_string(value); }
    void set(const std::string& key, int value) { m_values[key] = std::to_string(value); }
    void set(const std::string& key, unsigned long long value) {
        m_values[key] = std::to_string(value);
    }
    void set(const std::string& key, unsigned long value) {
        m_values[key] = std::to_string(value);
    }

    bool has(const std::string& key) const { return m_values.count(key) != 0; }

    const std::string& get(const std::string& key) const {
        auto it = m_values.find(key);
        if (it == m_values.end()) throw ConfigError("missing key '" + key + "'");
        return it->second;
    }

    double real(const std::string& key) const { return parse_real(get(key), key); }
    long long integer(const std::string& key) const { return parse_integer(get(key), key); }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        const std::string& v = get(key);
        if (trim(v).empty()) return out;
        for (const auto& part : split(v, ',')) out.push_back(parse_real(trim(part), key));
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return m_values; }

    void merge(const KeyValues& other) {
        for (const auto& [k, v] : other.m_values) m_values[k] = v;
    }

    std::string to_string(const std::string& header) const {
        std::string out = "# " + header + "\n";
        for (const auto& [k, v] : m_values) out += k + "=" + v + "\n";
        return out;
    }

    static KeyValues parse(const std::string& text) {
        KeyValues kv;
        std::istringstream in(text);
        std::string line;
        int number = 0;
        while (std::getline(in, line)) {
            ++number;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(number) + ": expected key=value");
            kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
        return kv;
    }

private:
    std::map<std::string, std::string> m_values;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot write '" + path + "'");
    out << contents;
    if (!out) throw IOError("write to '" + path + "' failed");
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::string matrix_to_string(const Matrix& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i) out += ';';
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_real(m(i, j));
        }
    }
    return out;
}

inline Matrix matrix_from_string(const std::string& text, Eigen::Index rows, Eigen::Index cols,
                                 const std::string& what) {
    Matrix m(rows, cols);
    const auto row_parts = rows == 0 ? std::vector<std::string>{} : split(text, ';');
    if (static_cast<Eigen::Index>(row_parts.size()) != rows)
        throw ConfigError(what + ": expected " + std::to_string(rows) + " rows");
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto cells = split(row_parts[static_cast<std::size_t>(i)], ',');
        if (static_cast<Eigen::Index>(cells.size()) != cols)
            throw ConfigError(what + ": row " + std::to_string(i) + " has " +
                              std::to_string(cells.size()) + " entries, expected " +
                              std::to_string(cols));
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = parse_real(cells[static_cast<std::size_t>(j)], what);
    }
    return m;
}

}  // namespace adasin
