#include "vatkg/prompts.hpp"

#include "vatkg/kg.hpp"

namespace vatkg::prompts {

namespace {

std::string flat(std::string_view text) { return normalize_surface(text); }

}  // namespace

std::string recaption(std::string_view caption, std::string_view title,
                      std::string_view description) {
  std::string p;
  p += "You will rewrite the caption of a short video clip into a knowledge-intensive caption.\n";
  p += "You are given the original caption and the title and description of the source video.\n";
  p += "Keep every event that is visible or audible in the clip. Replace generic words with the\n";
  p += "specific entities named in the metadata (species, breeds, places, people, instruments,\n";
  p += "objects) and add background facts about those entities where the metadata supports them.\n";
  p += "Do not add details that neither the caption nor the metadata supports.\n";
  p += "Answer with the refined caption only, as a single paragraph.\n";
  p += "\n";
  p += "Caption: " + flat(caption) + "\n";
  p += "Title: " + flat(title) + "\n";
  p += "Description: " + flat(description) + "\n";
  p += "\n";
  p += "Refined caption:";
  return p;
}

std::string triplet_grounding(std::string_view caption, std::size_t count) {
  std::string p;
  p += "Triplet extraction.\n";
  p += "Extract knowledge triplets from the caption. A triplet links two concrete concepts\n";
  p += "mentioned in the caption (objects, animals, people, places, sounds) through a short\n";
  p += "relation. Prefer concepts that can be seen or heard in the clip.\n";
  p += "Write one triplet per line as (head; relation; tail). Write about " +
       std::to_string(count) + " triplets and nothing else.\n";
  p += "\n";
  p += "Example caption: A quokka hops across the grass on Rottnest Island while tourists take photos.\n";
  p += "Example triplets:\n";
  p += "(quokka; lives on; Rottnest Island)\n";
  p += "(quokka; IsA; mammal)\n";
  p += "(tourist; photographs; quokka)\n";
  p += "\n";
  p += "Example caption: A desert tawny owl perches on a rock and hoots at dusk in the Negev desert.\n";
  p += "Example triplets:\n";
  p += "(desert tawny owl; perches on; rock)\n";
  p += "(desert tawny owl; lives in; desert)\n";
  p += "(Negev; IsA; desert)\n";
  p += "\n";
  p += "Caption: " + flat(caption) + "\n";
  p += "Triplets:";
  return p;
}

std::string description_crawl(std::string_view term, std::size_t count) {
  std::string p;
  p += "Concept description.\n";
  p += "Write up to " + std::to_string(count) +
       " short encyclopedic descriptions of the concept below. If the concept\n";
  p += "has several common senses, write one description per sense. Put each description on\n";
  p += "its own line, without numbering or extra commentary.\n";
  p += "\n";
  p += "Concept: " + flat(term) + "\n";
  p += "Descriptions:";
  return p;
}

}  // namespace vatkg::prompts
