#include "voe/canonical_json.hpp"

#include <cstdio>
#include <cstdlib>

namespace voe::io {

std::string format_double9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

double snap9(double x) {
    return std::strtod(format_double9(x).c_str(), nullptr);
}

namespace {

void escape_string(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void dump_rec(const Json& j, std::string& out) {
    switch (j.type()) {
        case Json::value_t::object: {
            out += '{';
            bool first = true;
            // nlohmann objects iterate in key order already.
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                escape_string(it.key(), out);
                out += ':';
                dump_rec(it.value(), out);
            }
            out += '}';
            break;
        }
        case Json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                dump_rec(j[i], out);
            }
            out += ']';
            break;
        }
        case Json::value_t::string:
            escape_string(j.get_ref<const std::string&>(), out);
            break;
        case Json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case Json::value_t::number_integer:
            out += std::to_string(j.get<long long>());
            break;
        case Json::value_t::number_unsigned:
            out += std::to_string(j.get<unsigned long long>());
            break;
        case Json::value_t::number_float:
            out += format_double9(j.get<double>());
            break;
        case Json::value_t::null:
        default:
            out += "null";
            break;
    }
}

}  // namespace

std::string canonical_dump(const Json& j) {
    std::string out;
    dump_rec(j, out);
    return out;
}

}  // namespace voe::io
