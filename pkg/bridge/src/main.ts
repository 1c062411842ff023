import { createBridgeServer } from "./server.js";

const port = Number(process.env.PORT ?? 8811);
const server = createBridgeServer();
server.listen(port, () => {
  const address = server.address();
  const actual = typeof address === "object" && address ? address.port : port;
  console.log(JSON.stringify({ event: "listening", port: actual }));
});
