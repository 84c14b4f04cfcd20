#ifndef PANQ_ERRORS_HPP
#define PANQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace panq {

// Base type for all toolkit errors. Subcommands map these to exit code 1;
// command-line usage problems exit with 2 instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define PANQ_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& msg) : Error(msg) {}     \
    }

// core
PANQ_DEFINE_ERROR(OverlapViolation);
PANQ_DEFINE_ERROR(UnknownCategory);
PANQ_DEFINE_ERROR(AreaMismatch);

// imgproc
PANQ_DEFINE_ERROR(NonPositiveSigma);
PANQ_DEFINE_ERROR(DegenerateRegion);
PANQ_DEFINE_ERROR(TooFewPoints);
PANQ_DEFINE_ERROR(CollinearPoints);
PANQ_DEFINE_ERROR(DegeneratePolygon);

// synthesis
PANQ_DEFINE_ERROR(BoxOutOfBounds);

// matching / metrics
PANQ_DEFINE_ERROR(DimensionMismatch);
PANQ_DEFINE_ERROR(CategoryTableMismatch);
PANQ_DEFINE_ERROR(MissingConfidence);

// experiment
PANQ_DEFINE_ERROR(EmptyGrid);
PANQ_DEFINE_ERROR(TooFewItems);
PANQ_DEFINE_ERROR(MixedThresholds);
PANQ_DEFINE_ERROR(TooFewFolds);

// io
PANQ_DEFINE_ERROR(DecodeError);
PANQ_DEFINE_ERROR(UnsupportedFormat);
PANQ_DEFINE_ERROR(IdOverflow);
PANQ_DEFINE_ERROR(SidecarMismatch);
PANQ_DEFINE_ERROR(MissingColumn);
PANQ_DEFINE_ERROR(MalformedRow);
PANQ_DEFINE_ERROR(EmptyInput);
PANQ_DEFINE_ERROR(WriteError);

#undef PANQ_DEFINE_ERROR

}  // namespace panq

#endif
