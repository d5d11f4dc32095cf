#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sselab {

/// Raised when an integration, quadrature or decomposition cannot produce a
/// trustworthy number. Carries the offending location when one exists
/// (a quadrature node, a trajectory stream, a step index).
class NumericFailure : public std::runtime_error {
public:
    explicit NumericFailure(const std::string& what,
                            std::optional<double> location = std::nullopt,
                            std::optional<std::size_t> index = std::nullopt)
        : std::runtime_error(what), location_(location), index_(index) {}

    std::optional<double> location() const { return location_; }
    std::optional<std::size_t> index() const { return index_; }

private:
    std::optional<double> location_;
    std::optional<std::size_t> index_;
};

/// Malformed configuration input. `line` is 1-based, 0 when not applicable.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, std::string field, const std::string& message)
        : std::runtime_error(format(line, field, message)), line_(line), field_(std::move(field)) {}

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    static std::string format(std::size_t line, const std::string& field, const std::string& message) {
        std::string out = "config";
        if (line > 0) out += ":" + std::to_string(line);
        if (!field.empty()) out += " [" + field + "]";
        return out + ": " + message;
    }

    std::size_t line_;
    std::string field_;
};

/// A value together with non-fatal diagnostics (domain warnings, validity notes).
template <class T>
struct Diagnosed {
    T value{};
    std::vector<std::string> warnings;

    bool ok() const { return warnings.empty(); }
    operator const T&() const { return value; }
};

}  // namespace sselab
