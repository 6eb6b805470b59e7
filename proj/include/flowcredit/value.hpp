#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "flowcredit/error.hpp"

namespace flowcredit {

// Tagged scalar: a real number or a categorical label. Booleans travel as
// reals 0.0/1.0.
class Value {
public:
    Value() : is_category_(false), number_(0.0) {}
    Value(double v) : is_category_(false), number_(v) {}  // NOLINT: implicit by design

    static Value category(std::string label) {
        Value v;
        v.is_category_ = true;
        v.label_ = std::move(label);
        return v;
    }

    bool is_real() const noexcept { return !is_category_; }
    bool is_category() const noexcept { return is_category_; }

    double real() const {
        if (is_category_)
            fail(Errc::DomainError, "categorical value '" + label_ + "' used where a number is required");
        return number_;
    }

    const std::string& label() const {
        if (!is_category_)
            fail(Errc::DomainError, "numeric value used where a category is required");
        return label_;
    }

    bool operator==(const Value& o) const {
        if (is_category_ != o.is_category_) return false;
        return is_category_ ? label_ == o.label_ : number_ == o.number_;
    }
    bool operator!=(const Value& o) const { return !(*this == o); }

    std::string to_string() const {
        if (is_category_) return label_;
        std::ostringstream os;
        os.precision(17);
        os << number_;
        return os.str();
    }

private:
    bool is_category_;
    double number_ = 0.0;
    std::string label_;
};

inline bool truthy(const Value& v) { return v.real() != 0.0; }

}  // namespace flowcredit
