#include "fpg/text.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "fpg/error.hpp"

namespace fpg {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error(ErrorKind::Config, "cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
    return v;
}

std::vector<double> read_value_file(const std::string& path, std::string_view what) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open " + std::string(what) + " file '" + path + "'");
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        out.push_back(parse_double(line, what));
    }
    return out;
}

}  // namespace fpg
