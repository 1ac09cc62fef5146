#pragma once

#include <stdexcept>
#include <string>

namespace numcolor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent on-disk data (codebooks, checkpoints, text tables).
class FormatError : public Error {
public:
    enum class Kind { bad_magic, version_mismatch, truncated, non_finite, malformed, trailing_data };

    FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace numcolor
