#pragma once

// Command-line arguments forwarded by the doctest main so that tests which
// drive external artifacts (the CLI binary, the corpus directory) can find
// them without hard-coded paths.
extern int test_argc;
extern char** test_argv;
