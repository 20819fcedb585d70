#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace seanet {

/// Error type thrown on any contract violation (shape mismatch, bad config,
/// malformed file, ...). Messages always name the expected vs actual values.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << ")";
    return os.str();
}

namespace detail {
inline void format_parts(std::ostringstream&) {}
template <typename A, typename... Rest>
void format_parts(std::ostringstream& os, const A& a, const Rest&... rest) {
    os << a;
    format_parts(os, rest...);
}
} // namespace detail

template <typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
    std::ostringstream os;
    detail::format_parts(os, parts...);
    throw Error(os.str());
}

} // namespace seanet

#define SEANET_CHECK(cond, ...)                                                \
    do {                                                                       \
        if (!(cond)) ::seanet::fail(__VA_ARGS__);                              \
    } while (0)
