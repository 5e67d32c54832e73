from vault.service.protocol import ProtocolServer, ServiceConfig

__all__ = ["ProtocolServer", "ServiceConfig"]
