#pragma once

#include <stdexcept>
#include <string>

namespace semcom {

// Base class for every error the library throws.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SEMCOM_DEFINE_ERROR(NAME)                                  \
    struct NAME : Error {                                          \
        explicit NAME(const std::string& msg) : Error(msg) {}      \
    }

// semantics
SEMCOM_DEFINE_ERROR(MalformedRle);
SEMCOM_DEFINE_ERROR(MalformedElement);
SEMCOM_DEFINE_ERROR(InvariantViolation);
SEMCOM_DEFINE_ERROR(DimensionMismatch);

// embeddings
SEMCOM_DEFINE_ERROR(ParseError);
SEMCOM_DEFINE_ERROR(ZeroVector);
SEMCOM_DEFINE_ERROR(DimMismatch);
SEMCOM_DEFINE_ERROR(UnknownWord);

// policy
SEMCOM_DEFINE_ERROR(AlreadyStarted);
SEMCOM_DEFINE_ERROR(ProtocolViolation);

// protocol
SEMCOM_DEFINE_ERROR(BadMagic);
SEMCOM_DEFINE_ERROR(BadVersion);
SEMCOM_DEFINE_ERROR(CrcMismatch);
SEMCOM_DEFINE_ERROR(Truncated);
SEMCOM_DEFINE_ERROR(MissingFragment);
SEMCOM_DEFINE_ERROR(DuplicateSeq);
SEMCOM_DEFINE_ERROR(SessionAbort);

// channel
SEMCOM_DEFINE_ERROR(SingularCode);

// baseline
SEMCOM_DEFINE_ERROR(MalformedBitstream);
SEMCOM_DEFINE_ERROR(UnknownScheme);

// reconstruct
SEMCOM_DEFINE_ERROR(DimensionUnknown);
SEMCOM_DEFINE_ERROR(ExternalToolFailure);
SEMCOM_DEFINE_ERROR(Timeout);
SEMCOM_DEFINE_ERROR(BadResponse);

// metrics
SEMCOM_DEFINE_ERROR(EmptyReference);

// harness
SEMCOM_DEFINE_ERROR(ConfigInvalid);
SEMCOM_DEFINE_ERROR(SchemaError);

#undef SEMCOM_DEFINE_ERROR

}  // namespace semcom
