#ifndef EXITOPT_ERRORS_HPP
#define EXITOPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace exitopt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter validation
struct NonPositiveSigma : Error { NonPositiveSigma() : Error("sigma must be > 0") {} };
struct NonPositiveRate : Error { NonPositiveRate() : Error("r must be > 0") {} };
struct NonPositiveGamma : Error { NonPositiveGamma() : Error("gamma must be > 0") {} };
struct NegativeDemand : Error { NegativeDemand() : Error("demand level must be >= 0") {} };
struct NonFiniteParameter : Error { NonFiniteParameter() : Error("parameters must be finite") {} };

// Problem classification
struct InadmissibleParams : Error { InadmissibleParams() : Error("parameters violate r > sigma^2 + 2*alpha") {} };
struct TrivialProblem : Error { TrivialProblem() : Error("effective cost K_eff <= 0: never exit") {} };
struct TrivialReduction : Error { TrivialReduction() : Error("sunk-cost reduction yields K_eff <= 0") {} };

// Analytic / policy
struct ThresholdAboveState : Error { ThresholdAboveState() : Error("threshold b must satisfy 0 < b <= x") {} };

// Truncated solver
struct CapTooSmall : Error { CapTooSmall() : Error("cap C must exceed the zero-profit level 2 sqrt(K_eff)/gamma") {} };
struct NewtonDiverged : Error { NewtonDiverged(const std::string& m = "Newton iteration failed to converge") : Error(m) {} };
struct InvariantViolation : Error { InvariantViolation(const std::string& m) : Error(m) {} };
struct DomainError : Error { DomainError(const std::string& m = "argument outside valid domain") : Error(m) {} };
struct OutOfDomain : Error { OutOfDomain() : Error("x outside [0, C]") {} };

// Finite differences
struct IterationLimit : Error { IterationLimit() : Error("PSOR iteration limit reached") {} };

// Monte Carlo
struct InvalidThreshold : Error { InvalidThreshold() : Error("require x0 > b > 0, or b = 0 for never-exit") {} };
struct InvalidConfig : Error { InvalidConfig(const std::string& m = "invalid simulation config") : Error(m) {} };

// Configuration / IO
struct ConfigError : Error { ConfigError(const std::string& m) : Error(m) {} };

} // namespace exitopt

#endif
