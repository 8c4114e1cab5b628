/*
Copyright 2026 The crandiag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

// Umbrella header.
#pragma once

#include "crandiag/allocation.hpp"
#include "crandiag/common.hpp"
#include "crandiag/downlink.hpp"
#include "crandiag/experiment.hpp"
#include "crandiag/instance.hpp"
#include "crandiag/majorization.hpp"
#include "crandiag/matrix_kernels.hpp"
#include "crandiag/oracle.hpp"
#include "crandiag/uplink.hpp"
