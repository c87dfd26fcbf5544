#include "rcm/domain.hpp"

namespace rcm {

CostParameters validate_costs(const CostParameters& params) {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v)) throw DomainError(std::string(name) + " non-finite");
        if (v < 0) throw DomainError(std::string(name) + " negative");
    };
    check(params.c_fa, "c_fa");
    check(params.c_fr, "c_fr");
    check(params.c_ch_base, "c_ch_base");
    check(params.lambda, "lambda");
    if (params.c_fa + params.c_fr <= 0)
        throw DomainError("degenerate costs: c_fa + c_fr must be positive");
    return params;
}

}  // namespace rcm
