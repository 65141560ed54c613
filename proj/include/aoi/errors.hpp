#pragma once

#include <stdexcept>
#include <string>

namespace aoi {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define AOI_DEFINE_ERROR(Name)              \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

// jet arithmetic
AOI_DEFINE_ERROR(JetMismatch);
AOI_DEFINE_ERROR(DivisionBySingularJet);
AOI_DEFINE_ERROR(NonVanishingConstantTerm);

// service distributions
AOI_DEFINE_ERROR(UnsupportedDensity);
AOI_DEFINE_ERROR(MgfDomainError);
AOI_DEFINE_ERROR(ConvergenceError);

// analytic engine
AOI_DEFINE_ERROR(ConsistencyError);
AOI_DEFINE_ERROR(OutsideConvergenceRegion);

// transfer-function solver
AOI_DEFINE_ERROR(SingularSystem);

// simulation and statistics
AOI_DEFINE_ERROR(InvalidConfig);
AOI_DEFINE_ERROR(InsufficientSamples);
AOI_DEFINE_ERROR(PositiveExponentRejected);

// experiment specs
AOI_DEFINE_ERROR(ValidationError);

#undef AOI_DEFINE_ERROR

/// Malformed experiment document. Carries the offending line (0 if unknown) and key.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::string key = {})
        : Error(format(what, line, key)), message_(what), line_(line), key_(std::move(key)) {}

    /// Message without the line/key prefix.
    const std::string& message() const noexcept { return message_; }

    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    static std::string format(const std::string& what, std::size_t line, const std::string& key) {
        std::string out;
        if (line != 0) out += "line " + std::to_string(line) + ": ";
        if (!key.empty()) out += "key '" + key + "': ";
        return out + what;
    }

    std::string message_;
    std::size_t line_;
    std::string key_;
};

} // namespace aoi
