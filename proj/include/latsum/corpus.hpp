#pragma once

#include <vector>

#include "forms.hpp"

namespace latsum {

// Built-in forms exercised by the identity suites.  Small n keeps every
// p^m histogram cheap; sum5sq and indef5 are the experiment workhorses.
inline const std::vector<IntegerForm>& corpus_forms() {
    static const std::vector<IntegerForm> forms = {
        IntegerForm::parse("x1^2 + x2^2"),
        IntegerForm::parse("x1^2 + x2^2 + x3^2"),
        IntegerForm::parse("x1^3 - 2*x2^3"),
        IntegerForm::parse("x1^2 + x1*x2 + x2^2"),
        IntegerForm::parse("x1^2 + x2^2 + x3^2 + x4^2 + x5^2"),
        IntegerForm::parse("x1^2 + x2^2 + x3^2 + x4^2 - x5^2"),
    };
    return forms;
}

inline IntegerForm corpus_sum5sq() {
    return IntegerForm::parse("x1^2 + x2^2 + x3^2 + x4^2 + x5^2");
}

inline IntegerForm corpus_indef5() {
    return IntegerForm::parse("x1^2 + x2^2 + x3^2 + x4^2 - x5^2");
}

} // namespace latsum
