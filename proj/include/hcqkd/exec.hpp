#pragma once

namespace hcqkd {

// Every parallel kernel keeps a serial lane producing bit-identical output;
// tests compare the two and the bench target times them.
enum class Exec { Serial, Parallel };

}  // namespace hcqkd
