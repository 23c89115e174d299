// Copyright 2026 The Fairrank Authors
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

#ifndef FAIRRANK_FAIRRANK_H_
#define FAIRRANK_FAIRRANK_H_

#include "fairrank/csv.h"
#include "fairrank/fairopt.h"
#include "fairrank/generator.h"
#include "fairrank/ingest.h"
#include "fairrank/measures.h"
#include "fairrank/ranking.h"
#include "fairrank/rng.h"

#endif  // FAIRRANK_FAIRRANK_H_
