#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "specdec/errors.hpp"

namespace specdec::textio {

/// Shortest decimal that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view s, const char* what) {
    std::string tmp(s);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || tmp.empty()) {
        throw ConfigError(std::string("bad number for ") + what + ": '" + tmp + "'");
    }
    return v;
}

inline long long parse_int(std::string_view s, const char* what) {
    std::string tmp(s);
    char* end = nullptr;
    long long v = std::strtoll(tmp.c_str(), &end, 10);
    if (end != tmp.c_str() + tmp.size() || tmp.empty()) {
        throw ConfigError(std::string("bad integer for ") + what + ": '" + tmp + "'");
    }
    return v;
}

/// Encode a symbol for one-token-per-line storage: '%', whitespace and
/// control bytes become %XX. Decode inverts exactly.
inline std::string percent_encode(std::string_view s) {
    constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (c == '%' || u <= 0x20 || u == 0x7F) {
            out += '%';
            out += hex[(u >> 4) & 0xF];
            out += hex[u & 0xF];
        } else {
            out += c;
        }
    }
    return out;
}

inline std::string percent_decode(std::string_view s) {
    auto hexval = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%') {
            if (i + 2 >= s.size()) throw ConfigError("truncated %XX escape");
            int hi = hexval(s[i + 1]);
            int lo = hexval(s[i + 2]);
            if (hi < 0 || lo < 0) throw ConfigError("bad %XX escape");
            out += static_cast<char>((hi << 4) | lo);
            i += 2;
        } else {
            out += s[i];
        }
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// getline that strips a trailing '\r' so checkpoints survive CRLF mangling.
inline bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

inline std::string require_line(std::istream& in, const char* what) {
    std::string line;
    if (!read_line(in, line)) {
        throw ConfigError(std::string("unexpected end of file, expected ") + what);
    }
    return line;
}

/// "key value" line where key must match; returns the value part.
inline std::string require_field(std::istream& in, std::string_view key) {
    std::string line = require_line(in, std::string(key).c_str());
    if (line.size() < key.size() || std::string_view(line).substr(0, key.size()) != key ||
        line.size() == key.size() || line[key.size()] != ' ') {
        throw ConfigError("expected '" + std::string(key) + " <value>', got '" + line + "'");
    }
    return line.substr(key.size() + 1);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace specdec::textio
