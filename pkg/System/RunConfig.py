import os
import hashlib
import logging
from collections import OrderedDict

from configobj import ConfigObj, ConfigObjError

from Config import ConfigParser, ConfigValidationError
from Config.Parsers import JsonParser
from Physics.Dynamics import SystemParams, InvalidParameterError, PRESET_DIR, available_presets
from Physics.Drive import CombSpec, InvalidCombError

REPO_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_SPEC = os.path.join(REPO_DIR, "Config", "Specs", "RunConfig.validate")
JSON_CONFIG_SPEC = os.path.join(REPO_DIR, "Config", "Specs", "RunConfig.json")

# Namespace of environment overrides: PREFIX<KEY> or PREFIX<SECTION>__<KEY>
ENV_PREFIX = "COMBCONDUCTOR_"

EXPERIMENT_SECTIONS = {
    "fock-fluorescence" : "fock_fluorescence",
    "jump-track"        : "jump_track",
    "rates"             : "rates",
    "dephasing"         : "dephasing",
    "confidence-time"   : "confidence_time"
}


class RunConfig(object):
    # Validated run configuration with the physical objects it describes
    def __init__(self, config):

        self.config         = config
        self.params         = SystemParams.from_config(config["params"])
        self.comb           = CombSpec.from_config(config["comb"], self.params)
        self.experiment     = config["experiment"]
        self.preset         = config["preset"]
        self.master_seed    = int(config["master_seed"])
        self.n_trajectories = int(config["n_trajectories"])
        self.workers        = int(config["workers"])
        self.output_dir     = config["output_dir"]
        self.integrator     = config["integrator"]
        self.substeps       = int(config["substeps"])
        self.add_comb       = bool(config["add_comb"])
        self.tolerances     = dict(config["tolerances"])

    def section(self, name):
        return self.config[name]

    @property
    def experiment_section(self):
        return self.config[EXPERIMENT_SECTIONS[self.experiment]]

    def to_lines(self):
        # Fully resolved config, every default written out
        return self.config.write()

    def to_text(self):
        return "\n".join(self.to_lines()) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())
        return path

    def config_hash(self):
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def __repr__(self):
        return "RunConfig(experiment=%s, preset=%s, seed=%d)" % (self.experiment, self.preset, self.master_seed)


def env_overrides(environ=None):
    """
    Collect config overrides from namespaced environment variables.

    COMBCONDUCTOR_WORKERS=4 sets a top level key and COMBCONDUCTOR_PARAMS__ETA=0.2
    a key of the [params] section. Comma separated values become lists.
    """
    environ = os.environ if environ is None else environ
    overrides = OrderedDict()
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        value = environ[name]
        if "," in value:
            value = [part.strip() for part in value.split(",") if part.strip()]
        key = name[len(ENV_PREFIX):].lower()
        if "__" in key:
            section, key = key.split("__", 1)
            overrides.setdefault(section, OrderedDict())[key] = value
        else:
            overrides[key] = value
        logging.info("Config override from environment: %s = %s" % (name, environ[name]))
    return overrides


def flag_overrides(seed=None, workers=None, preset=None):
    overrides = OrderedDict()
    if seed is not None:
        overrides["master_seed"] = str(seed)
    if workers is not None:
        overrides["workers"] = str(workers)
    if preset is not None:
        overrides["preset"] = preset
    return overrides


def _user_layer(config_file, text):
    # Returns the user layer (path, lines or dict) and any JSON schema errors
    if text is not None:
        return text.splitlines(), []
    if config_file is None:
        return [], []
    if config_file.lower().endswith((".json", ".jsn")):
        parser = JsonParser(config_file, JSON_CONFIG_SPEC, raise_errors=False)
        return parser.get_config(), parser.get_errors()
    return config_file, []


def _requested_preset(user_layer, overlays):
    preset = "paper"
    if isinstance(user_layer, dict):
        preset = user_layer.get("preset", preset)
    else:
        try:
            preset = ConfigObj(user_layer).get("preset", preset)
        except (ConfigObjError, SyntaxError, IOError):
            pass
    for overlay in overlays:
        preset = overlay.get("preset", preset)
    return preset


def _semantic_errors(config):
    # Cross-field checks the configspec cannot express
    errors = []
    params = config.get("params", {})
    if params.get("n_trunc") is not None and params.get("n_max") is not None and params["n_trunc"] < params["n_max"]:
        errors.append("[params] n_trunc: must be at least n_max (%s < %s)" % (params["n_trunc"], params["n_max"]))

    numbers = config.get("fock_fluorescence", {}).get("photon_numbers") or []
    n_max = params.get("n_max")
    if n_max is not None and any(not 0 <= n <= n_max for n in numbers):
        errors.append("[fock_fluorescence] photon_numbers: values must lie in [0, n_max=%s]" % n_max)

    for section in ["confidence_time"]:
        for level in config.get(section, {}).get("levels") or []:
            if not 0.5 < level < 1:
                errors.append("[%s] levels: %s outside (0.5, 1)" % (section, level))
    return errors


def validate_config(text=None, config_file=None, preset=None, seed=None, workers=None, environ=None):
    """
    Validate a run config and return (RunConfig or None, error list).

    Layers, lowest first: configspec defaults, preset file, user config, environment
    overrides, command line flags. All problems are reported, not only the first.
    """
    user_layer, errors = _user_layer(config_file, text)
    overlays = [env_overrides(environ), flag_overrides(seed, workers, preset)]

    preset_name = _requested_preset(user_layer, overlays)
    preset_file = os.path.join(PRESET_DIR, "%s.config" % preset_name)
    base_files = []
    if os.path.isfile(preset_file):
        base_files.append(preset_file)
    else:
        errors.append("preset: unknown preset '%s' (available: %s)" % (preset_name, ", ".join(available_presets())))

    parser = ConfigParser(user_layer, CONFIG_SPEC, config_format="config", raise_errors=False,
                          base_files=base_files, overlays=overlays)
    config = parser.get_config()
    errors.extend(parser.get_errors())
    if config.get("master_seed") is None:
        errors.append("master_seed: missing required value (seeds are never taken from the clock)")
    if not errors:
        errors.extend(_semantic_errors(config))

    run_config = None
    if not errors:
        try:
            run_config = RunConfig(config)
        except (InvalidParameterError, InvalidCombError, ValueError) as e:
            errors.append(str(e))
    return run_config, errors


def load_run_config(config_file=None, preset=None, seed=None, workers=None, environ=None, text=None):
    run_config, errors = validate_config(text, config_file, preset, seed, workers, environ)
    if errors:
        for error in errors:
            logging.error("Invalid run config: %s" % error)
        raise ConfigValidationError("Run config did not pass validation (%d errors)!" % len(errors), errors)
    logging.debug("Resolved run config:\n%s" % run_config.to_text())
    return run_config

