#pragma once

#include <stdexcept>
#include <string>

namespace idt {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses name the failure mode.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define IDT_DEFINE_ERROR(name)                         \
    class name : public error {                        \
    public:                                            \
        using error::error;                            \
    }

IDT_DEFINE_ERROR(dimension_mismatch);
IDT_DEFINE_ERROR(scale_guard_exceeded);
IDT_DEFINE_ERROR(zero_probability_pinning);
IDT_DEFINE_ERROR(support_violation);
IDT_DEFINE_ERROR(mode_unsupported);
IDT_DEFINE_ERROR(unsupported_symbol);
IDT_DEFINE_ERROR(invalid_range);
IDT_DEFINE_ERROR(infeasible_pinning);
IDT_DEFINE_ERROR(invalid_model);
IDT_DEFINE_ERROR(provider_failure);
IDT_DEFINE_ERROR(incompatible_mode);
IDT_DEFINE_ERROR(schema_mismatch);

#undef IDT_DEFINE_ERROR

// Configuration and file parse errors carry the offending field name.
class config_error : public error {
public:
    config_error(std::string field, const std::string& what)
        : error("field '" + field + "': " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace idt
