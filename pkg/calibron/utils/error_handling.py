from typing import Dict, Any, Callable, Optional
from calibron.utils.logging import get_logger


class CalibronError(Exception):
    """Erreur de base du simulateur"""


class ParameterError(CalibronError, ValueError):
    """Paramètre numérique invalide, dimension incohérente ou index hors bornes"""


class ProtocolError(CalibronError, RuntimeError):
    """Alternance prévision / observation non respectée"""


class ConfigurationError(CalibronError):
    """Configuration de partie invalide"""


class SolverError(CalibronError):
    """Le certificat du solveur minimax n'a pas pu être vérifié"""


# Codes de sortie de la commande `calibron run`
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


class ErrorHandler:
    def __init__(self):
        self.logger = get_logger(__name__)
        self.error_handlers: Dict[str, Callable[[Exception, Dict], Dict]] = {
            'parameter': self._handle_parameter_error,
            'protocol': self._handle_protocol_error,
            'configuration': self._handle_configuration_error,
            'solver': self._handle_solver_error,
            'io': self._handle_io_error,
            'system': self._handle_system_error
        }

    def add_handler(self, error_type: str, handler: Callable[[Exception, Dict], Dict]):
        """Ajoute un gestionnaire d'erreur personnalisé"""
        self.error_handlers[error_type] = handler

    @staticmethod
    def classify(error: Exception) -> str:
        """Détermine la catégorie d'une exception"""
        if isinstance(error, ParameterError):
            return 'parameter'
        if isinstance(error, ProtocolError):
            return 'protocol'
        if isinstance(error, ConfigurationError):
            return 'configuration'
        if isinstance(error, SolverError):
            return 'solver'
        if isinstance(error, OSError):
            return 'io'
        return 'system'

    def _handle_parameter_error(self, error: Exception, context: Dict) -> Dict:
        error_info = {
            'type': 'parameter_error',
            'message': str(error),
            'operation': context.get('operation'),
            'exit_code': EXIT_INVALID
        }
        self.logger.error(f"Paramètre invalide: {error_info}")
        return error_info

    def _handle_protocol_error(self, error: Exception, context: Dict) -> Dict:
        error_info = {
            'type': 'protocol_error',
            'message': str(error),
            'round': context.get('round'),
            'exit_code': EXIT_FAILURE
        }
        self.logger.error(f"Violation du protocole: {error_info}")
        return error_info

    def _handle_configuration_error(self, error: Exception, context: Dict) -> Dict:
        error_info = {
            'type': 'configuration_error',
            'message': str(error),
            'field': context.get('field'),
            'exit_code': EXIT_INVALID
        }
        self.logger.error(f"Configuration invalide: {error_info}")
        return error_info

    def _handle_solver_error(self, error: Exception, context: Dict) -> Dict:
        error_info = {
            'type': 'solver_error',
            'message': str(error),
            'round': context.get('round'),
            'exit_code': EXIT_FAILURE
        }
        self.logger.error(f"Erreur du solveur: {error_info}")
        return error_info

    def _handle_io_error(self, error: Exception, context: Dict) -> Dict:
        error_info = {
            'type': 'io_error',
            'message': str(error),
            'path': context.get('path', getattr(error, 'filename', None)),
            'exit_code': EXIT_FAILURE
        }
        self.logger.error(f"Erreur d'entrée/sortie: {error_info}")
        return error_info

    def _handle_system_error(self, error: Exception, context: Dict) -> Dict:
        error_info = {
            'type': 'system_error',
            'message': str(error),
            'component': context.get('component'),
            'operation': context.get('operation'),
            'exit_code': EXIT_FAILURE
        }
        self.logger.error(f"Erreur système: {error_info}", exc_info=error)
        return error_info

    def handle_error(self, error: Exception, context: Optional[Dict] = None) -> Dict:
        """Traite une erreur avec le gestionnaire approprié"""
        context = context or {}
        error_type = context.get('error_type') or self.classify(error)
        handler = self.error_handlers.get(error_type, self._handle_system_error)
        return handler(error, context)

    def exit_code(self, error: Exception, context: Optional[Dict] = None) -> int:
        """Traite l'erreur et retourne le code de sortie du processus"""
        return int(self.handle_error(error, context)['exit_code'])


_TYPE_CHECKS = {
    'string': lambda v: isinstance(v, str),
    'number': lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    'integer': lambda v: isinstance(v, int) and not isinstance(v, bool),
    'boolean': lambda v: isinstance(v, bool),
    'list': lambda v: isinstance(v, list),
}


def validate_fields(data: Dict[str, Any], schema: Dict[str, list]) -> bool:
    """Valide une section de configuration selon un schéma

    Le schéma associe à chaque champ une liste de règles parmi 'required',
    'optional', 'string', 'number', 'integer', 'boolean', 'list' et 'positive'.
    """
    for field, rules in schema.items():
        if field not in data or data[field] is None:
            if 'required' in rules:
                raise ConfigurationError(f"Champ requis manquant: {field}")
            continue

        value = data[field]
        for rule in rules:
            check = _TYPE_CHECKS.get(rule)
            if check is not None and not check(value):
                raise ConfigurationError(f"Le champ '{field}' doit être de type {rule} (reçu {value!r})")
            if rule == 'positive' and not value > 0:
                raise ConfigurationError(f"Le champ '{field}' doit être strictement positif (reçu {value!r})")

    return True
