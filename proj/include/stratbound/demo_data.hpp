#pragma once

#include "stratbound/dataset.hpp"

namespace stratbound {

// Unit records reconstructed from the early-college offer study's published
// margins: its six (assignment, category) group sizes and outcome rates,
// with the study's 58% offer rate as a constant assignment probability. The
// original microdata are not public; these rows reproduce every moment the
// estimators consume.
Dataset demo_dataset();

}  // namespace stratbound
