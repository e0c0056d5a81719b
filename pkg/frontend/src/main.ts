import { GatewayClient } from "./client.js";
import { OperatorConsole } from "./console.js";

const params = new URLSearchParams(window.location.search);
const gateway = params.get("gateway") ?? "http://127.0.0.1:8123";
const scenario = params.get("scenario");

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

const operatorConsole = new OperatorConsole(root, new GatewayClient(gateway));
void operatorConsole.start(
  scenario ? { scenario } : { config: { api: "gift_bag", scene: "gift_bag",
                                        aliases: "gift_bag", backend: "det" } });
