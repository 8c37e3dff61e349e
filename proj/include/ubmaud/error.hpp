#pragma once

#include <stdexcept>
#include <string>

namespace ubmaud {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define UBMAUD_DEFINE_ERROR(Name)                      \
    class Name : public Error {                        \
    public:                                            \
        explicit Name(const std::string& what)         \
            : Error(std::string(#Name ": ") + what) {} \
    }

// Structure and shape errors.
UBMAUD_DEFINE_ERROR(InvalidPartition);
UBMAUD_DEFINE_ERROR(StructureViolation);
UBMAUD_DEFINE_ERROR(PartitionMismatch);
UBMAUD_DEFINE_ERROR(DimensionMismatch);
UBMAUD_DEFINE_ERROR(IndexOutOfRange);

// Numerical regime errors.
UBMAUD_DEFINE_ERROR(NotPositiveDefinite);
UBMAUD_DEFINE_ERROR(Singular);
UBMAUD_DEFINE_ERROR(NotMaudRepresentable);
UBMAUD_DEFINE_ERROR(RankDeficient);

// Estimation.
UBMAUD_DEFINE_ERROR(NotConverged);
UBMAUD_DEFINE_ERROR(InadmissibleStart);
UBMAUD_DEFINE_ERROR(InvalidDataset);

// Inference.
UBMAUD_DEFINE_ERROR(RankDeficientContrast);
UBMAUD_DEFINE_ERROR(SingularContrastCovariance);
UBMAUD_DEFINE_ERROR(InvalidPValue);

// Simulation.
UBMAUD_DEFINE_ERROR(InadmissibleGamma);
UBMAUD_DEFINE_ERROR(PerturbationNotPD);
UBMAUD_DEFINE_ERROR(InvalidConfig);

// I/O.
UBMAUD_DEFINE_ERROR(ParseError);

#undef UBMAUD_DEFINE_ERROR

} // namespace ubmaud
