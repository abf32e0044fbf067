#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace vatkg::prompts {

// Fields are flattened to a single line before substitution so scripted
// clients can match them with line-oriented patterns.

std::string recaption(std::string_view caption, std::string_view title,
                      std::string_view description);

/// Asks for `count` triplets, one "(head; relation; tail)" per line.
std::string triplet_grounding(std::string_view caption, std::size_t count);

/// Asks for up to `count` descriptions of `term`, one per line.
std::string description_crawl(std::string_view term, std::size_t count);

}  // namespace vatkg::prompts
