#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mlpg::encoder {

/// Lowercased name parts split at underscores, other non-alphanumerics,
/// lower→upper case changes, acronym ends ("XMLParser" → xml, parser) and
/// letter/digit boundaries.
std::vector<std::string> split_subtokens(std::string_view name);

}  // namespace mlpg::encoder
