import { VaultApp } from "./app";
import { VaultClient, WebSocketTransport } from "./client";

const protocol = location.protocol === "https:" ? "wss" : "ws";
const socket = new WebSocket(`${protocol}://${location.host}/ws`);
const client = new VaultClient(new WebSocketTransport(socket));
const root = document.getElementById("app");
if (root) {
  const app = new VaultApp(root, client);
  socket.addEventListener("open", () => void app.start());
}
