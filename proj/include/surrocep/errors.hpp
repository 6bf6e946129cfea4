#pragma once

#include <stdexcept>
#include <string>

namespace surrocep {

// Bad input or configuration supplied by the caller (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical or sampler failure (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SURROCEP_DEFINE_ERROR(Name, Base)                          \
  class Name : public Base {                                       \
   public:                                                         \
    explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
  }

SURROCEP_DEFINE_ERROR(NotPositiveDefinite, NumericalError);
SURROCEP_DEFINE_ERROR(DegenerateVariance, NumericalError);
SURROCEP_DEFINE_ERROR(QuadratureFailure, NumericalError);
SURROCEP_DEFINE_ERROR(RankDeficient, NumericalError);
SURROCEP_DEFINE_ERROR(AllMassAtBoundary, NumericalError);
SURROCEP_DEFINE_ERROR(NonFiniteTarget, NumericalError);
SURROCEP_DEFINE_ERROR(ChainDiverged, NumericalError);
SURROCEP_DEFINE_ERROR(RejectionStarvation, NumericalError);

SURROCEP_DEFINE_ERROR(IndexOutOfRange, InputError);
SURROCEP_DEFINE_ERROR(MissingBaseline, InputError);
SURROCEP_DEFINE_ERROR(TooFewDraws, InputError);
SURROCEP_DEFINE_ERROR(IncompleteConfig, InputError);
SURROCEP_DEFINE_ERROR(DataFormatError, InputError);

#undef SURROCEP_DEFINE_ERROR

}  // namespace surrocep
