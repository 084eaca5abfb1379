#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace irtkit {

/// Bad input: malformed files, parameters outside their domain, inconsistent
/// item sets. The CLI maps this to exit status 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Degenerate items (all-correct or all-incorrect) found while validating a
/// response matrix for calibration.
class DegenerateItemsError : public ValidationError {
public:
    explicit DegenerateItemsError(std::vector<std::string> item_ids);
    const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }

private:
    std::vector<std::string> item_ids_;
};

/// A numerical procedure failed to produce a usable answer. Exit status 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Logistic regression outcome is (quasi-)separable or has no variation.
class SeparationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Design matrix columns are linearly dependent.
class RankDeficientError : public NumericalError {
public:
    RankDeficientError(const std::string& what, std::vector<std::string> columns)
        : NumericalError(what), columns_(std::move(columns)) {}
    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
};

}  // namespace irtkit
