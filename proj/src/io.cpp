#include "locus/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace locus::io {

namespace {

void emit(const nlohmann::json& j, int indent, int depth, std::string& out) {
    const auto pad = [&](int d) {
        if (indent >= 0) out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    const char* nl = indent >= 0 ? "\n" : "";
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ',';
                    out += nl;
                }
                first = false;
                pad(depth + 1);
                out += nlohmann::json(it.key()).dump();
                out += indent >= 0 ? ": " : ":";
                emit(it.value(), indent, depth + 1, out);
            }
            out += nl;
            pad(depth);
            out += '}';
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            out += nl;
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) {
                    out += ',';
                    out += nl;
                }
                pad(depth + 1);
                emit(j[i], indent, depth + 1, out);
            }
            out += nl;
            pad(depth);
            out += ']';
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            // JSON has no literal for non-finite numbers.
            out += std::isfinite(v) ? format_fixed(v) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string format_fixed(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string dump_fixed(const nlohmann::json& j, int indent) {
    std::string out;
    emit(j, indent, 0, out);
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace locus::io
