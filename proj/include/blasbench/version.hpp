#pragma once

#define BLASBENCH_VERSION "0.1.0"
