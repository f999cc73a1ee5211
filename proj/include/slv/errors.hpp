#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slv {

/// Input outside an operation's mathematical domain (non-unit axis, gimbal lock, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration data (tables, layouts, datasets, config files).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filter or allocator synthesis could not produce a valid result.
class DesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linearization requested at a condition where the small-perturbation model is undefined.
class LinearizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state derivative produced a non-finite value during integration.
class PropagationError : public std::runtime_error {
public:
    PropagationError(std::size_t index, double time)
        : std::runtime_error("non-finite derivative in state component " +
                             std::to_string(index) + " at t=" + std::to_string(time)),
          index_(index), time_(time) {}

    std::size_t index() const noexcept { return index_; }
    double time() const noexcept { return time_; }

private:
    std::size_t index_;
    double time_;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace slv
