#pragma once

// Minimal TOML reader covering the subset the run configurations use:
// bare and dotted keys, [table] and [[array-of-tables]] headers, strings,
// integers, floats, booleans, and single-line arrays. Anything outside the
// subset is rejected with the offending line number. No third-party TOML
// library ships in the toolchain image, hence this file.

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kfp/errors.hpp"

namespace kfp::toml {

struct Value {
    enum class Type { string_t, integer, real, boolean, array, table };
    Type type = Type::table;
    std::string str;
    std::int64_t ival = 0;
    double dval = 0.0;
    bool bval = false;
    std::vector<Value> arr;
    std::map<std::string, Value> tab;
    int line = 0;

    bool is_number() const { return type == Type::integer || type == Type::real; }
    double as_number() const { return type == Type::integer ? static_cast<double>(ival) : dval; }
};

namespace detail {

[[noreturn]] inline void fail(int line, const std::string& msg)
{
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool bare_key_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

inline std::vector<std::string> split_key_path(std::string_view s, int line)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == '.') {
            if (cur.empty()) fail(line, "empty key segment");
            parts.push_back(cur);
            cur.clear();
        } else if (bare_key_char(c)) {
            cur.push_back(c);
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) fail(line, "whitespace inside key");
        } else {
            fail(line, std::string("invalid key character '") + c + "'");
        }
    }
    if (cur.empty()) fail(line, "empty key");
    parts.push_back(cur);
    return parts;
}

struct ValueParser {
    std::string_view s;
    std::size_t pos = 0;
    int line;

    void skip_ws()
    {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }

    Value parse()
    {
        skip_ws();
        if (pos >= s.size()) fail(line, "missing value");
        Value v;
        v.line = line;
        const char c = s[pos];
        if (c == '"') {
            v.type = Value::Type::string_t;
            v.str = parse_string();
        } else if (c == '[') {
            v.type = Value::Type::array;
            ++pos;
            skip_ws();
            while (pos < s.size() && s[pos] != ']') {
                v.arr.push_back(parse());
                skip_ws();
                if (pos < s.size() && s[pos] == ',') {
                    ++pos;
                    skip_ws();
                } else if (pos < s.size() && s[pos] != ']') {
                    fail(line, "expected ',' or ']' in array");
                }
            }
            if (pos >= s.size()) fail(line, "unterminated array");
            ++pos;
        } else if (s.substr(pos, 4) == "true") {
            v.type = Value::Type::boolean;
            v.bval = true;
            pos += 4;
        } else if (s.substr(pos, 5) == "false") {
            v.type = Value::Type::boolean;
            v.bval = false;
            pos += 5;
        } else {
            parse_number(v);
        }
        return v;
    }

    std::string parse_string()
    {
        std::string out;
        ++pos;  // opening quote
        while (pos < s.size()) {
            char c = s[pos++];
            if (c == '"') return out;
            if (c == '\\') {
                if (pos >= s.size()) fail(line, "dangling escape in string");
                char e = s[pos++];
                switch (e) {
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    default: fail(line, std::string("unsupported escape '\\") + e + "'");
                }
            } else {
                out.push_back(c);
            }
        }
        fail(line, "unterminated string");
    }

    void parse_number(Value& v)
    {
        const std::size_t start = pos;
        bool real = false;
        if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
        while (pos < s.size()) {
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                ++pos;
            } else if (c == '.' || c == 'e' || c == 'E') {
                real = true;
                ++pos;
                if ((c == 'e' || c == 'E') && pos < s.size() && (s[pos] == '+' || s[pos] == '-'))
                    ++pos;
            } else {
                break;
            }
        }
        const std::string tok(s.substr(start, pos - start));
        if (tok.empty() || tok == "+" || tok == "-") fail(line, "expected a value");
        try {
            std::size_t used = 0;
            if (real) {
                v.type = Value::Type::real;
                v.dval = std::stod(tok, &used);
            } else {
                v.type = Value::Type::integer;
                v.ival = std::stoll(tok, &used);
            }
            if (used != tok.size()) fail(line, "malformed number '" + tok + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail(line, "malformed number '" + tok + "'");
        }
    }
};

inline std::string strip_comment(std::string_view raw, int line)
{
    std::string out;
    bool in_string = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < raw.size())
                out.push_back(raw[++i]);
            else if (c == '"')
                in_string = false;
        } else if (c == '#') {
            break;
        } else {
            if (c == '"') in_string = true;
            out.push_back(c);
        }
    }
    if (in_string) fail(line, "unterminated string");
    return out;
}

inline Value* navigate(Value* root, const std::vector<std::string>& path, std::size_t count,
                       int line)
{
    Value* cur = root;
    for (std::size_t i = 0; i < count; ++i) {
        auto [it, inserted] = cur->tab.try_emplace(path[i]);
        Value& next = it->second;
        if (inserted) {
            next.type = Value::Type::table;
            next.line = line;
        }
        if (next.type == Value::Type::array) {
            if (next.arr.empty() || next.arr.back().type != Value::Type::table)
                fail(line, "'" + path[i] + "' is not a table");
            cur = &next.arr.back();
        } else if (next.type == Value::Type::table) {
            cur = &next;
        } else {
            fail(line, "'" + path[i] + "' already holds a value");
        }
    }
    return cur;
}

} // namespace detail

/// Parses the supported subset, returning the root table. Duplicate keys,
/// duplicate table headers, and syntax outside the subset all raise
/// ConfigError with a line reference.
inline Value parse(const std::string& text)
{
    Value root;
    root.type = Value::Type::table;
    Value* current = &root;
    std::map<std::string, int> explicit_headers;

    int line = 0;
    std::size_t at = 0;
    while (at <= text.size()) {
        const std::size_t nl = text.find('\n', at);
        std::string_view raw(text.data() + at,
                             (nl == std::string::npos ? text.size() : nl) - at);
        at = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line;

        const std::string stripped = detail::strip_comment(raw, line);
        std::string_view sv = detail::trim(stripped);
        if (sv.empty()) continue;

        if (sv.front() == '[') {
            const bool is_array = sv.size() > 1 && sv[1] == '[';
            const std::string_view close = is_array ? "]]" : "]";
            const std::size_t end = sv.find(close);
            if (end == std::string_view::npos || !detail::trim(sv.substr(end + close.size())).empty())
                detail::fail(line, "malformed table header");
            const auto path = detail::split_key_path(
                detail::trim(sv.substr(is_array ? 2 : 1, end - (is_array ? 2 : 1))), line);
            std::string joined;
            for (const auto& p : path) joined += joined.empty() ? p : "." + p;
            Value* parent = detail::navigate(&root, path, path.size() - 1, line);
            auto [it, inserted] = parent->tab.try_emplace(path.back());
            Value& node = it->second;
            if (is_array) {
                if (inserted) {
                    node.type = Value::Type::array;
                    node.line = line;
                } else if (node.type != Value::Type::array) {
                    detail::fail(line, "'" + joined + "' is not an array of tables");
                }
                Value elem;
                elem.type = Value::Type::table;
                elem.line = line;
                node.arr.push_back(std::move(elem));
                current = &node.arr.back();
            } else {
                if (inserted) {
                    node.type = Value::Type::table;
                    node.line = line;
                } else if (node.type != Value::Type::table) {
                    detail::fail(line, "'" + joined + "' is not a table");
                }
                if (!explicit_headers.try_emplace(joined, line).second)
                    detail::fail(line, "duplicate table header [" + joined + "]");
                current = &node;
            }
            continue;
        }

        const std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            detail::fail(line, "expected 'key = value'");
        const auto path = detail::split_key_path(detail::trim(sv.substr(0, eq)), line);
        detail::ValueParser vp{sv.substr(eq + 1), 0, line};
        Value val = vp.parse();
        vp.skip_ws();
        if (vp.pos != vp.s.size())
            detail::fail(line, "trailing characters after value");
        Value* parent = detail::navigate(current, path, path.size() - 1, line);
        if (!parent->tab.try_emplace(path.back(), std::move(val)).second)
            detail::fail(line, "duplicate key '" + path.back() + "'");
    }
    return root;
}

} // namespace kfp::toml
