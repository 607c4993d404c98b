#pragma once

#include "graphrank/provider.hpp"

// The structured-output contracts every stage holds its provider to.
// Validators check shape only; semantic checks (score ranges, id coverage)
// belong to the calling module, which owns the repair/fallback policy.

namespace graphrank::provider::schemas {

/// {"super": non-empty string, "sub": string}
ResponseSchema classify();

/// JSON array of {"name": non-empty string, "description"?: string}
ResponseSchema schema_gen();

/// Flat JSON object: attribute name -> string | number | bool | null
ResponseSchema extraction();

/// {"scores": [{"id": string, "score": number, "rationale"?: string}]}
ResponseSchema rank_scores();

/// {"score": number}
ResponseSchema judge();

}  // namespace graphrank::provider::schemas
