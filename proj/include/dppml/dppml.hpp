//
// Copyright 2026 The dppml Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//


// Umbrella header for the dppml library.

#ifndef DPPML_DPPML_HPP_
#define DPPML_DPPML_HPP_

#include "dppml/common.hpp"
#include "dppml/dataio.hpp"
#include "dppml/dml.hpp"
#include "dppml/eval.hpp"
#include "dppml/kappa.hpp"
#include "dppml/mechanisms.hpp"
#include "dppml/pairgraph.hpp"

#endif  // DPPML_DPPML_HPP_
