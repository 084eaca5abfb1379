#include "irtkit/error.hpp"

namespace irtkit {

namespace {

std::string describe(const std::vector<std::string>& ids) {
    std::string msg = "degenerate items (all responses identical): ";
    for (std::size_t i = 0; i < ids.size(); ++i) msg += (i ? ", " : "") + ids[i];
    return msg;
}

}  // namespace

DegenerateItemsError::DegenerateItemsError(std::vector<std::string> item_ids)
    : ValidationError(describe(item_ids)), item_ids_(std::move(item_ids)) {}

}  // namespace irtkit
