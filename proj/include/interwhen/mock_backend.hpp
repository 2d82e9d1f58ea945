#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "interwhen/backend.hpp"

namespace interwhen {

// Deterministic scripted backend for tests and offline experiments.
//
// Script schema (JSON):
//   {
//     "start": "root",                     // optional, default "root"
//     "nodes": {
//       "root": {
//         "tokens": ["Let me ", "look.\n"],// one stream event per entry
//         "next": "rest",                  // default continuation (optional)
//         "branches": {                    // taken when the prefill diverges
//           "Wait, the cell at (2,1) is a wall": "fixed",
//           "__end_think__": "answer",     // matches an injected </think>
//           "*": "fallback"                // matches any injected text
//         }
//       },
//       ...
//     },
//     "probes": [
//       { "suffix": "</think>",            // longest suffix of the prefill wins
//         "calls": [                       // one entry per probe call; last repeats
//           [ [["A", -0.1], ["B", -2.4]] ] // call = list of per-token distributions
//         ] }
//     ],
//     "attempts": ["try1", "try2"],        // optional: each fresh (empty-prefill)
//                                          // generation starts at the next name;
//                                          // the last one repeats
//     "prompts": [                         // optional: route by prompt content
//       { "contains": "Numbers: 3 5", "start": "propose35" }
//     ]
//   }
//
// generate() resolves the request prefill against the node tree: model text
// must follow the scripted tokens, and any injected text must match a branch
// key of the node where the divergence occurs (keys are compared as prefixes
// of the injected text, longest first; "__end_think__" fires on an injected
// think-closing tag and swallows the rest of the injection, as does "*").
// A prefill the script does not cover throws ContractViolation.
std::unique_ptr<Backend> make_mock_backend(nlohmann::json script, std::string id = "mock");

std::unique_ptr<Backend> load_mock_backend(const std::string& path);

}  // namespace interwhen
