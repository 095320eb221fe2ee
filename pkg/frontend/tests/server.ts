/** Shared coordinates for the test service instance. */
export const TEST_PORT = 8717;
export const TEST_BASE_URL = `http://127.0.0.1:${TEST_PORT}`;
