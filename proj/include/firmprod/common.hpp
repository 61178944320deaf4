#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace firmprod {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define FIRMPROD_DEFINE_ERROR(Name) \
    struct Name : Error {           \
        using Error::Error;         \
    }

// panel_io
FIRMPROD_DEFINE_ERROR(MissingColumn);
FIRMPROD_DEFINE_ERROR(DuplicateKey);
FIRMPROD_DEFINE_ERROR(EmptyPanel);
FIRMPROD_DEFINE_ERROR(ZeroLabor);
FIRMPROD_DEFINE_ERROR(ConstantColumn);
FIRMPROD_DEFINE_ERROR(UnknownVariable);
// synth_dgp
FIRMPROD_DEFINE_ERROR(InvalidConfig);
// prodest
FIRMPROD_DEFINE_ERROR(DegreeTooHigh);
FIRMPROD_DEFINE_ERROR(RankDeficient);
FIRMPROD_DEFINE_ERROR(NonPositiveValue);
FIRMPROD_DEFINE_ERROR(TooFewRows);
FIRMPROD_DEFINE_ERROR(OptimizerDidNotConverge);
FIRMPROD_DEFINE_ERROR(NoConsecutivePeriods);
// impute_pca
FIRMPROD_DEFINE_ERROR(TooManyComponents);
FIRMPROD_DEFINE_ERROR(SchemaMismatch);
FIRMPROD_DEFINE_ERROR(AllMissingRow);
// som
FIRMPROD_DEFINE_ERROR(EmptyInput);
FIRMPROD_DEFINE_ERROR(DimensionMismatch);
// cluster
FIRMPROD_DEFINE_ERROR(KTooLarge);
FIRMPROD_DEFINE_ERROR(CurveTooShort);
FIRMPROD_DEFINE_ERROR(LengthMismatch);
// regress
FIRMPROD_DEFINE_ERROR(DidNotConverge);
// cli_report
FIRMPROD_DEFINE_ERROR(IncompleteManifest);
FIRMPROD_DEFINE_ERROR(ParseError);

#undef FIRMPROD_DEFINE_ERROR

}  // namespace firmprod
