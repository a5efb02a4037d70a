#pragma once

#include <stdexcept>
#include <string>

namespace warplib {

// Error categories map onto CLI exit codes: usage 1, data 2, numerical 3.
enum class ErrorKind { Usage = 1, Data = 2, Numerical = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message,
          std::string hint = {})
        : std::runtime_error(message),
          kind_(kind),
          code_(std::move(code)),
          hint_(std::move(hint)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }
    const std::string& hint() const { return hint_; }

private:
    ErrorKind kind_;
    std::string code_;
    std::string hint_;
};

struct NonMonotone : Error {
    explicit NonMonotone(const std::string& msg)
        : Error(ErrorKind::Data, "NonMonotone", msg,
                "warping values must be strictly increasing with a positive "
                "discrete derivative") {}
};

struct GridMismatch : Error {
    explicit GridMismatch(const std::string& msg)
        : Error(ErrorKind::Data, "GridMismatch", msg,
                "all functions in one operation must share the same grid") {}
};

struct NegativeVariance : Error {
    explicit NegativeVariance(const std::string& msg)
        : Error(ErrorKind::Data, "NegativeVariance", msg, "variances must be >= 0") {}
};

struct NumericalFailure : Error {
    explicit NumericalFailure(const std::string& msg)
        : Error(ErrorKind::Numerical, "NumericalFailure", msg) {}
};

struct DegenerateSample : Error {
    explicit DegenerateSample(const std::string& msg)
        : Error(ErrorKind::Data, "DegenerateSample", msg,
                "sample has zero total variance but the cutoff rule demands "
                "components") {}
};

struct NotNormalized : Error {
    explicit NotNormalized(const std::string& msg)
        : Error(ErrorKind::Data, "NotNormalized", msg,
                "phi must satisfy integral(exp(phi)) = 1; subtract "
                "log(integral(exp(phi))) first") {}
};

struct TooFewGroups : Error {
    explicit TooFewGroups(const std::string& msg)
        : Error(ErrorKind::Data, "TooFewGroups", msg,
                "fanova needs at least two groups with two members each") {}
};

struct RankDeficient : Error {
    explicit RankDeficient(const std::string& msg)
        : Error(ErrorKind::Data, "RankDeficient", msg,
                "regression scores are collinear; lower basis_dim") {}
};

struct SingleClass : Error {
    explicit SingleClass(const std::string& msg)
        : Error(ErrorKind::Data, "SingleClass", msg,
                "logistic regression needs both classes present") {}
};

struct NonMonotoneData : Error {
    explicit NonMonotoneData(const std::string& msg)
        : Error(ErrorKind::Data, "NonMonotoneData", msg,
                "growth curves must be non-decreasing; supply at least four "
                "strictly increasing measurement ages") {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg, const std::string& hint = {})
        : Error(ErrorKind::Data, "ParseError", msg, hint) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg, const std::string& hint = {})
        : Error(ErrorKind::Usage, "InvalidArgument", msg, hint) {}
};

}  // namespace warplib
