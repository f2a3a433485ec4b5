#pragma once

#include <stdexcept>
#include <string>

namespace adasin {

/// Base class of every error raised by the library. `kind()` names the
/// failure category so callers (and the CLI) can map it to an exit status.
class error : public std::runtime_error {
public:
    error(const char* kind, const std::string& what)
        : std::runtime_error(std::string(kind) + ": " + what), m_kind(kind) {}

    const char* kind() const noexcept { return m_kind; }

private:
    const char* m_kind;
};

#define ADASIN_DEFINE_ERROR(Name)                                         \
    class Name : public error {                                           \
    public:                                                               \
        explicit Name(const std::string& what) : error(#Name, what) {}    \
    };

ADASIN_DEFINE_ERROR(ZeroVector)
ADASIN_DEFINE_ERROR(DimensionMismatch)
ADASIN_DEFINE_ERROR(DomainError)
ADASIN_DEFINE_ERROR(EmptyBatch)
ADASIN_DEFINE_ERROR(UnknownMethod)
ADASIN_DEFINE_ERROR(NonFiniteLogit)
ADASIN_DEFINE_ERROR(StateMismatch)
ADASIN_DEFINE_ERROR(NoRealRoot)
ADASIN_DEFINE_ERROR(EmptyHistory)
ADASIN_DEFINE_ERROR(DivergenceDetected)
ADASIN_DEFINE_ERROR(ConfigError)
ADASIN_DEFINE_ERROR(ShapeMismatch)
ADASIN_DEFINE_ERROR(SpecError)
ADASIN_DEFINE_ERROR(InsufficientData)
ADASIN_DEFINE_ERROR(InsufficientPairs)
ADASIN_DEFINE_ERROR(EmptyLog)
ADASIN_DEFINE_ERROR(IOError)

#undef ADASIN_DEFINE_ERROR

template <class Error>
inline void ensure(bool cond, const std::string& what) {
    if (!cond) throw Error(what);
}

}  // namespace adasin
