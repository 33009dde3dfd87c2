#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ppm {

enum class ErrorKind {
    InvalidArgument,
    Parse,
    Io,
    Schema,
    Config,
    CacheMiss,
    Http,
    Degenerate,
};

/// Library-wide exception type. The kind tells callers which contract was
/// violated; the message carries the human-readable context (row numbers,
/// byte offsets, file paths).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

inline void str_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void str_append(std::ostringstream& os, const T& head, const Rest&... rest) {
    os << head;
    str_append(os, rest...);
}

}  // namespace detail

/// Builds a message from stream-formattable pieces.
template <typename... Parts>
std::string strcat(const Parts&... parts) {
    std::ostringstream os;
    detail::str_append(os, parts...);
    return os.str();
}

template <typename... Parts>
[[noreturn]] void raise(ErrorKind kind, const Parts&... parts) {
    throw Error(kind, strcat(parts...));
}

}  // namespace ppm
