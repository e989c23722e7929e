#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gcnrn {

using index_t = std::int64_t;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GCNRN_DECLARE_ERROR(Name)              \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

GCNRN_DECLARE_ERROR(InvalidGraph);
GCNRN_DECLARE_ERROR(DimensionMismatch);
GCNRN_DECLARE_ERROR(ZeroOperator);
GCNRN_DECLARE_ERROR(NonFiniteGradient);
GCNRN_DECLARE_ERROR(BatchTooSmall);
GCNRN_DECLARE_ERROR(LabelOutOfRange);
GCNRN_DECLARE_ERROR(PairIndexOutOfRange);
GCNRN_DECLARE_ERROR(PairBudgetExceeded);
GCNRN_DECLARE_ERROR(NoEdges);
GCNRN_DECLARE_ERROR(ClassTooSmall);
GCNRN_DECLARE_ERROR(DegreeInfeasible);
GCNRN_DECLARE_ERROR(EmptyGraph);
GCNRN_DECLARE_ERROR(ParseError);
GCNRN_DECLARE_ERROR(JoinError);
GCNRN_DECLARE_ERROR(EmptyIntersection);
GCNRN_DECLARE_ERROR(ConfigError);
GCNRN_DECLARE_ERROR(IoError);

#undef GCNRN_DECLARE_ERROR

}  // namespace gcnrn
