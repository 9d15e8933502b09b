hiermon_commands = [
    {
        "id": "run",
        "description": "Run a scenario and write trace, metrics and report",
        "arguments": [
            {"name": "scenario", "help": "scenario YAML file or bundled scenario name"},
            {"name": "overrides", "nargs": "*", "help": "dotted key=value overrides, e.g. defaults.latency=20"},
            {"name": "--seed", "type": int, "help": "override the scenario seed"},
            {"name": "--duration", "type": int, "help": "override the run length (ms of virtual time)"},
            {"name": "--out", "help": "output base directory (default: $HIERMON_OUT_DIR or ./out)"},
            {"name": "-D", "dest": "bindings", "action": "append", "default": [], "metavar": "VAR=value",
             "help": "bind a descriptor variable"},
        ],
    },
    {
        "id": "verify",
        "description": "Check a trace file with an oracle",
        "arguments": [
            {"name": "trace", "help": "trace.jsonl written by a run"},
            {"name": "--oracle", "default": "all", "help": "aggregation, conservation, repair or all"},
        ],
    },
    {
        "id": "parse-descriptor",
        "description": "Parse a deployment descriptor and print it, or its launch plan when variables are bound",
        "arguments": [
            {"name": "file", "help": "descriptor file"},
            {"name": "-D", "dest": "bindings", "action": "append", "default": [], "metavar": "VAR=value",
             "help": "bind a variable and resolve the launch plan"},
        ],
    },
]
